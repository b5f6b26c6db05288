#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hotdissect {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Genotype probabilities at one grid position: individuals x (BB, BR, RR).
using ProbMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

enum class Genotype : std::int8_t { BB = 0, BR = 1, RR = 2, Missing = -1 };

/// Individuals x markers, entries are Genotype codes.
using GenotypeMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return v != v; }

std::string_view to_string(Genotype g);

/// Parses BB/BR/RR/NA. Throws InputError otherwise.
Genotype parse_genotype(std::string_view code);

inline Genotype genotype_from_code(std::int8_t c) { return static_cast<Genotype>(c); }

/// Bad input data or arguments. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure during analysis. The CLI maps this to exit code 1.
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using WarningSink = std::function<void(const std::string&)>;

/// Replaces the process-wide warning sink and returns the previous one.
/// The default sink writes "warning: <msg>" to stderr.
WarningSink set_warning_sink(WarningSink sink);

void warn(const std::string& msg);

}  // namespace hotdissect
