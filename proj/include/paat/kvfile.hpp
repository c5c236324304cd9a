#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "paat/error.hpp"

// Flat key=value text: one pair per line, '#' comments, blank lines
// ignored. Values keep everything after the first '='.

namespace paat {

std::map<std::string, std::string> parseKeyValues(const std::string& text);
std::map<std::string, std::string> readKeyValueFile(const std::string& path);
std::string formatKeyValues(const std::map<std::string, std::string>& kv);
void writeKeyValueFile(const std::map<std::string, std::string>& kv, const std::string& path);

// Round-trip-exact double formatting (%.17g).
std::string formatDouble(double v);

// Typed lookups; throw SpecError naming the key on bad syntax.
std::uint64_t kvU64(const std::map<std::string, std::string>& kv, const std::string& key,
                    std::uint64_t fallback);
double kvDouble(const std::map<std::string, std::string>& kv, const std::string& key,
                double fallback);
std::string kvString(const std::map<std::string, std::string>& kv, const std::string& key,
                     const std::string& fallback);

}  // namespace paat
