#include "nhac/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <mutex>
#include <thread>

namespace nhac {

namespace {
std::mutex g_warn_mutex;
WarnHandler g_warn_handler;  // empty -> stderr
}  // namespace

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  if (g_warn_handler) {
    g_warn_handler(message);
  } else {
    std::cerr << "[nhac] warning: " << message << '\n';
  }
}

WarnHandler set_warn_handler(WarnHandler handler) {
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  std::swap(g_warn_handler, handler);
  return handler;
}

Vector normalize_or_basis(Vector v) {
  if (v.size() == 0) {
    throw InvalidInput("cannot normalize an empty vector");
  }
  const double n = v.norm();
  if (n == 0.0) {
    warn("normalizing a zero vector; substituting the first basis vector");
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / n;
}

double cosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw InvalidInput("cosine: dimension mismatch");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    return 0.0;
  }
  return a.dot(b) / (na * nb);
}

double euclidean_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw InvalidInput("euclidean_distance: dimension mismatch");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

Vector mean_vector(const std::vector<Vector>& vectors) {
  if (vectors.empty()) {
    throw InvalidInput("mean of an empty set of vectors");
  }
  Vector sum = Vector::Zero(vectors.front().size());
  for (const Vector& v : vectors) {
    if (v.size() != sum.size()) {
      throw InvalidInput("mean over vectors of mixed dimension");
    }
    sum += v;
  }
  return sum / static_cast<double>(vectors.size());
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw InvalidInput("not a decimal number: '" + std::string(text) + "'");
  }
  return value;
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (count == 0) {
    return;
  }
  const std::size_t workers =
      threads <= 1 ? 1
                   : std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  if (workers == 1) {
    body(0, count);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) {
      break;
    }
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& t : pool) {
    t.join();
  }
}

}  // namespace nhac
