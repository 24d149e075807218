#include <cstdio>

int main() {
    std::puts("martfl: placeholder");
    return 0;
}
