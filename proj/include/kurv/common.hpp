#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace kurv {

using Cplx = std::complex<double>;

// Base class for all errors raised by the library.  CLI maps these to exit
// code 1; everything else is a bug.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class BadArgument : public Error {
 public:
  explicit BadArgument(const std::string& what) : Error(what) {}
};

// Metric (or series constant term) too close to singular to invert safely.
class SingularMetric : public Error {
 public:
  explicit SingularMetric(const std::string& what) : Error(what) {}
};

class OutsideRegion : public Error {
 public:
  explicit OutsideRegion(const std::string& what) : Error(what) {}
};

class NotConverged : public Error {
 public:
  explicit NotConverged(const std::string& what) : Error(what) {}
};

}  // namespace kurv
