#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace nhac {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// Bad data handed to an operation (dimension mismatch, empty input, ...).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A configuration value or file that fails validation.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss and the epoch was abandoned.
struct TrainingAborted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using WarnHandler = std::function<void(const std::string&)>;

// Warnings go to stderr by default; tests install a handler to capture them.
// set_warn_handler returns the previous handler.
void warn(const std::string& message);
WarnHandler set_warn_handler(WarnHandler handler);

// Unit-normalizes v. A zero vector has no direction: it maps to the first
// basis vector and emits a warning.
Vector normalize_or_basis(Vector v);

// Cosine similarity, defined as 0 when either argument has zero norm.
double cosine(const Vector& a, const Vector& b);

// Euclidean distance with serial accumulation, so the result does not depend
// on SIMD lane layout and reference implementations can match it bitwise.
double euclidean_distance(const Vector& a, const Vector& b);

// Arithmetic mean of a non-empty, dimension-uniform set of vectors.
Vector mean_vector(const std::vector<Vector>& vectors);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

// Runs body(begin, end) over contiguous chunks of [0, count). threads <= 1
// runs inline. Chunks never overlap, so bodies writing disjoint output slots
// stay deterministic regardless of scheduling.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace nhac
