#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pixle/image.hpp"

namespace pixle {

/// One probability per class.
using ProbVector = std::vector<double>;

enum class OracleKind { Builtin, Linear, Process, Tcp };

struct OracleDescriptor {
  OracleKind kind = OracleKind::Builtin;
  std::string target;  // builtin name, model path, command line or address
  std::size_t num_classes = 0;
  bool concurrent_safe = false;
  std::optional<Shape> input_shape;  // unset: accepts any shape
};

/// Query-only classifier. Implementations must return a full probability vector.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual ProbVector query(const ImageTensor& image) = 0;
  virtual const OracleDescriptor& descriptor() const noexcept = 0;

  std::size_t num_classes() const noexcept { return descriptor().num_classes; }
  bool concurrent_safe() const noexcept { return descriptor().concurrent_safe; }

 protected:
  void check_shape(const ImageTensor& image) const;
};

/// Two-class toy: prob(class 0) is channel 0 at (0, 0), prob(class 1) its complement.
class PixelProbeOracle final : public Oracle {
 public:
  PixelProbeOracle();
  ProbVector query(const ImageTensor& image) override;
  const OracleDescriptor& descriptor() const noexcept override { return descriptor_; }

 private:
  OracleDescriptor descriptor_;
};

/// Softmax-regression weights. File layout: magic "PIXLW1", then classes, channels,
/// height, width as u32 little-endian, then row-major f32 weights and f32 biases.
struct LinearModel {
  std::size_t num_classes = 0;
  Shape shape;
  std::vector<float> weights;  // num_classes x shape.size(), row-major
  std::vector<float> bias;

  void validate() const;

  static LinearModel from_bytes(std::span<const std::uint8_t> bytes);
  std::vector<std::uint8_t> to_bytes() const;
  static LinearModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// softmax(W * flatten(image) + b), flattening in channel-major order.
ProbVector linear_softmax_classify(std::span<const float> weights, std::span<const float> bias,
                                   const ImageTensor& image);

class LinearOracle final : public Oracle {
 public:
  LinearOracle(LinearModel model, std::string source = "<memory>");
  ProbVector query(const ImageTensor& image) override;
  const OracleDescriptor& descriptor() const noexcept override { return descriptor_; }
  const LinearModel& model() const noexcept { return model_; }

 private:
  LinearModel model_;
  OracleDescriptor descriptor_;
};

/// Line-oriented byte stream to an external oracle server.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void write_line(std::string_view line) = 0;
  /// Returns the next line without its terminator; throws TransportError on EOF.
  virtual std::string read_line() = 0;
};

/// Runs `/bin/sh -c command` and speaks over the child's stdin/stdout.
class ProcessTransport final : public Transport {
 public:
  explicit ProcessTransport(const std::string& command);
  ~ProcessTransport() override;
  ProcessTransport(const ProcessTransport&) = delete;
  ProcessTransport& operator=(const ProcessTransport&) = delete;

  void write_line(std::string_view line) override;
  std::string read_line() override;

 private:
  int to_child_ = -1;
  int from_child_ = -1;
  int pid_ = -1;
  std::string buffer_;
};

/// Connects to HOST:PORT.
class TcpTransport final : public Transport {
 public:
  explicit TcpTransport(const std::string& address);
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  void write_line(std::string_view line) override;
  std::string read_line() override;

 private:
  int fd_ = -1;
  std::string buffer_;
};

inline constexpr int kProtocolVersion = 1;

struct Hello {
  int version = kProtocolVersion;
  std::size_t num_classes = 0;
  Shape shape;
  bool concurrent = false;
};

/// Reads and validates the server's hello.
Hello handshake(Transport& transport);

// Wire encoding (newline-delimited JSON, base64 payload of f32 LE channel-major values).
std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);
std::string encode_image_payload(const ImageTensor& image);
ImageTensor decode_image_payload(std::string_view base64, const Shape& shape);

Hello parse_hello(std::string_view line);
std::string format_hello(const Hello& hello);
std::string format_query(std::uint64_t id, const ImageTensor& image);
std::string format_probs(std::uint64_t id, const ProbVector& probs);
std::string format_error(std::uint64_t id, std::string_view message);
/// Parses a server reply to request `id`; error replies and non-normalized
/// vectors raise ProtocolError.
ProbVector parse_response(std::string_view line, std::uint64_t id, std::size_t num_classes);

/// Checks length, per-entry range and that the sum is within `tolerance` of 1.
void validate_probs(const ProbVector& probs, std::size_t num_classes, double tolerance);

/// Client side of the wire protocol. Requests on a non-concurrent server are serialized.
class RemoteOracle final : public Oracle {
 public:
  RemoteOracle(std::unique_ptr<Transport> transport, OracleKind kind, std::string target);
  ProbVector query(const ImageTensor& image) override;
  const OracleDescriptor& descriptor() const noexcept override { return descriptor_; }

 private:
  std::unique_ptr<Transport> transport_;
  OracleDescriptor descriptor_;
  std::mutex mutex_;
  std::uint64_t next_id_ = 1;
};

/// Parses builtin:NAME, linear:PATH, process:CMD or tcp:HOST:PORT.
OracleDescriptor parse_oracle_spec(std::string_view spec);
std::unique_ptr<Oracle> make_oracle(std::string_view spec);

const char* to_string(OracleKind kind) noexcept;

}  // namespace pixle
