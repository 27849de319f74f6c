#pragma once

#include <stdexcept>
#include <string>

namespace peakfdr {

// Base of every exception thrown by the library.
class error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class invalid_argument : public error
{
public:
  using error::error;
};

class degenerate_truncation : public error
{
public:
  degenerate_truncation()
      : error("truncation event has zero probability")
  {}
};

class non_convergence : public error
{
public:
  using error::error;
};

class infeasible_placement : public error
{
public:
  using error::error;
};

class kernel_too_wide : public error
{
public:
  using error::error;
};

class missing_neighbor : public error
{
public:
  using error::error;
};

class insufficient_maxima : public error
{
public:
  using error::error;
};

class format_error : public error
{
public:
  using error::error;
};

inline void require(bool condition, const std::string& message)
{
  if (!condition)
    throw invalid_argument(message);
}

} // namespace peakfdr
