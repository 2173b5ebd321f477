#pragma once

#include <stdexcept>
#include <string>

namespace nullcollapse {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (bad data, inconsistent sizes).
class MalformedData : public Error {
 public:
  using Error::Error;
};

// Construction of a derived object failed (e.g. a negative radicand in f2).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

class DomainMismatch : public Error {
 public:
  using Error::Error;
};

// Step control gave up: the step size fell below its floor.
class StepControlFailure : public Error {
 public:
  using Error::Error;
};

// A documented precondition of an orchestration call does not hold
// (e.g. a bisection bracket whose ends give the same outcome).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Config file failed schema validation; the message carries the field path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace nullcollapse
