#include "paat/kvfile.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace paat {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> parseKeyValues(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw SpecError("key=value parse error at line " + std::to_string(lineNo) + ": \"" +
                            t + "\"");
        }
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

std::map<std::string, std::string> readKeyValueFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parseKeyValues(buf.str());
}

std::string formatKeyValues(const std::map<std::string, std::string>& kv) {
    std::ostringstream out;
    for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
    return out.str();
}

void writeKeyValueFile(const std::map<std::string, std::string>& kv, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << formatKeyValues(kv);
}

std::string formatDouble(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t kvU64(const std::map<std::string, std::string>& kv, const std::string& key,
                    std::uint64_t fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw SpecError("bad integer for key \"" + key + "\": \"" + it->second + "\"");
    }
}

double kvDouble(const std::map<std::string, std::string>& kv, const std::string& key,
                double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw SpecError("bad number for key \"" + key + "\": \"" + it->second + "\"");
    }
}

std::string kvString(const std::map<std::string, std::string>& kv, const std::string& key,
                     const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

}  // namespace paat
