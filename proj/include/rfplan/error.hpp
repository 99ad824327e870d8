// SPDX-License-Identifier: Apache-2.0

#ifndef RFPLAN_ERROR_HPP
#define RFPLAN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace rfplan
{

// Root of the library's exception hierarchy.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Malformed input document (JSON syntax, missing keys, wrong types, bad CSV rows).
class ParseError : public Error
{
  public:
    using Error::Error;
};

// Well-formed input that violates a model invariant. The message names the offending entity.
class ValidationError : public Error
{
  public:
    using Error::Error;
};

// Degenerate geometric query (zero-length segment, non-unit direction, point inside a wedge).
class GeometryError : public Error
{
  public:
    using Error::Error;
};

// Argument outside the domain of a model or statistic.
class DomainError : public Error
{
  public:
    using Error::Error;
};

class IoError : public Error
{
  public:
    using Error::Error;
};

} // namespace rfplan

#endif
