#include "hotdissect/common.hpp"

#include <iostream>
#include <mutex>

namespace hotdissect {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

}  // namespace

std::string_view to_string(Genotype g) {
  switch (g) {
    case Genotype::BB: return "BB";
    case Genotype::BR: return "BR";
    case Genotype::RR: return "RR";
    case Genotype::Missing: return "NA";
  }
  return "NA";
}

Genotype parse_genotype(std::string_view code) {
  if (code == "BB") return Genotype::BB;
  if (code == "BR") return Genotype::BR;
  if (code == "RR") return Genotype::RR;
  if (code == "NA") return Genotype::Missing;
  throw InputError("invalid genotype code '" + std::string(code) + "' (expected BB, BR, RR or NA)");
}

WarningSink set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  WarningSink previous = std::move(sink());
  sink() = std::move(s);
  return previous;
}

void warn(const std::string& msg) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(msg);
}

}  // namespace hotdissect
