#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace agcoop {

struct Vec3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  [[nodiscard]] double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  [[nodiscard]] double squared_norm() const { return dot(*this); }
  [[nodiscard]] double norm() const { return std::sqrt(squared_norm()); }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

// Error hierarchy. Each failure class the public API documents has its own type
// so callers (and the CLI's JSON error output) can tell them apart.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual const char* kind() const noexcept { return "error"; }
};

class BoundsError : public Error {
 public:
  BoundsError(char axis, double value, double lo, double hi);
  [[nodiscard]] char axis() const noexcept { return axis_; }
  [[nodiscard]] const char* kind() const noexcept override { return "bounds"; }

 private:
  char axis_;
};

class LookupError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "lookup"; }
};

class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& why);
  [[nodiscard]] const std::string& field() const noexcept { return field_; }
  [[nodiscard]] const char* kind() const noexcept override { return "validation"; }

 private:
  std::string field_;
};

class FormatError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "format"; }
};

class VersionError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "version"; }
};

class PayloadError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "payload"; }
};

class PreconditionError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "precondition"; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "domain"; }
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "infeasible"; }
};

}  // namespace agcoop
