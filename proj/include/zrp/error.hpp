//! \file zrp/error.hpp
#pragma once

#include <stdexcept>
#include <string>

namespace zrp
{
//! Base for every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! A value violates a documented precondition or model assumption.
class ValidationError : public Error
{
  public:
    using Error::Error;
};

//! Argument outside the domain of a mathematical function (e.g. log of s <= 1).
class DomainError : public Error
{
  public:
    using Error::Error;
};

//! The engine reached a state with zero total rate.
class StallError : public Error
{
  public:
    using Error::Error;
};

//! Numerical integration or series failed to reach its tolerance.
class ConvergenceError : public Error
{
  public:
    explicit ConvergenceError(std::string const& what, double achieved = 0.0)
        : Error(what), achieved_(achieved)
    {
    }
    double achieved() const noexcept { return achieved_; }

  private:
    double achieved_;
};

//! Input file or report could not be parsed.
class ParseError : public Error
{
  public:
    using Error::Error;
};
}  // namespace zrp
