#include <sys/utsname.h>

#include <fstream>
#include <thread>

#include "abaudit/sim/scenario.hpp"

namespace abaudit::sim {

MachineDescriptor describe_machine() {
    MachineDescriptor m;
    std::ifstream cpuinfo("/proc/cpuinfo");
    for (std::string line; std::getline(cpuinfo, line);) {
        if (line.rfind("model name", 0) == 0) {
            auto colon = line.find(':');
            if (colon != std::string::npos) m.cpu = line.substr(line.find_first_not_of(' ', colon + 1));
            break;
        }
    }
    if (m.cpu.empty()) m.cpu = "unknown";
    m.hardware_threads = std::thread::hardware_concurrency();
    utsname u{};
    if (uname(&u) == 0) m.os = std::string(u.sysname) + " " + u.release + " " + u.machine;
#if defined(__clang__)
    m.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
    m.compiler = "g++ " __VERSION__;
#else
    m.compiler = "unknown";
#endif
    return m;
}

nlohmann::json to_json(const MachineDescriptor& m) {
    return {{"cpu", m.cpu}, {"hardware_threads", m.hardware_threads}, {"os", m.os}, {"compiler", m.compiler}};
}

}  // namespace abaudit::sim
