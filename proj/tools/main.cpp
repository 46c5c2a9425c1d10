#include <cstdio>

int main() {
    std::puts("cpomdp: placeholder");
    return 0;
}
