#pragma once

#include <stdexcept>
#include <string>

namespace otree {

// Invalid configuration: mismatched ring widths, bad parameters, missing enclave.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Value outside the representable range (fixed-point overflow, oversized tree).
class RangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Peer disconnect, malformed frame, or a receive that timed out.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dealer material ran out or does not match the requested correlation.
class PreprocessingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Share replication or tree-structure invariant violated.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input file content (non-binary CSV cell, corrupt share file).
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A requested structure would not fit in memory (e.g. a tree of depth 60).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse, e.g. asking for a PRG stream a party does not hold.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace otree
