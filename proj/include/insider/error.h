#ifndef INSIDER_ERROR_H_
#define INSIDER_ERROR_H_

#include <stdexcept>
#include <string>

namespace insider {

// Failure categories map onto CLI exit codes: data/format problems exit 2,
// numeric divergence exits 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace insider

#endif  // INSIDER_ERROR_H_
