#include <cstdio>

int main() {
    std::puts("irsopt: CLI not wired up yet");
    return 0;
}
