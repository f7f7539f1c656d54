#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fofscope {

/// Base class for everything this library throws on purpose.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent configuration (file or programmatic). CLI exit code 2.
class config_error : public error {
public:
  using error::error;
};

/// Malformed input data (DSF/CSV). CLI exit code 3.
class format_error : public error {
public:
  enum class reason { io, magic, header, length, crc, data };

  format_error(reason r, const std::string& msg) : error(msg), reason_(r) {}

  reason why() const noexcept { return reason_; }

private:
  reason reason_;
};

/// An operation was handed input it cannot work on (out-of-range slice,
/// zero-RMS noise, dispersion track exceeding the time span, ...).
class invalid_input : public error {
public:
  using error::error;
};

/// A pipeline stage failed; carries which chunk and stage. CLI exit code 4.
class stage_error : public error {
public:
  stage_error(std::size_t chunk, std::string stage, const std::string& msg)
      : error("chunk " + std::to_string(chunk) + ", stage " + stage + ": " + msg),
        chunk_(chunk),
        stage_(std::move(stage)) {}

  std::size_t chunk() const noexcept { return chunk_; }
  const std::string& stage() const noexcept { return stage_; }

private:
  std::size_t chunk_;
  std::string stage_;
};

}  // namespace fofscope
