#pragma once

#include <stdexcept>
#include <string>

namespace polydbg {

/// Base of every error raised by the library. Subclasses name the failure
/// class so callers can react (retry, surface to the client, abort).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

/// Framing failure on an inbound byte stream. The owning connection is
/// poisoned once this is raised.
class StreamError : public Error {
 public:
  StreamError(const std::string& what, std::string offending_prefix)
      : Error(what), prefix_(std::move(offending_prefix)) {}

  const std::string& offending_prefix() const noexcept { return prefix_; }

 private:
  std::string prefix_;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// The adapter refused (or does not advertise) a request the agent needs.
class CapabilityError : public Error {
 public:
  explicit CapabilityError(std::string request)
      : Error("debug adapter does not support required request: " + request),
        request_(std::move(request)) {}

  const std::string& request() const noexcept { return request_; }

 private:
  std::string request_;
};

class StartupTimeout : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ClassificationError : public Error {
 public:
  using Error::Error;
};

class AgentDead : public Error {
 public:
  using Error::Error;
};

class RegistrationError : public Error {
 public:
  using Error::Error;
};

class UnknownLanguage : public Error {
 public:
  explicit UnknownLanguage(std::string token)
      : Error("no debug agent registered for '" + token + "'"), token_(std::move(token)) {}

  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

class InvalidFrame : public Error {
 public:
  using Error::Error;
};

class LossyTransfer : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

class SystemError : public Error {
 public:
  using Error::Error;
};

}  // namespace polydbg
