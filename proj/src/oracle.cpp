#include "pixle/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

namespace pixle {

namespace {

constexpr char kMagic[] = "PIXLW1";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kHeaderLen = kMagicLen + 4 * 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

}  // namespace

void Oracle::check_shape(const ImageTensor& image) const {
  const auto& expected = descriptor().input_shape;
  if (expected && *expected != image.shape()) {
    throw ShapeMismatch("oracle expects a " + std::to_string(expected->channels) + "x" +
                        std::to_string(expected->height) + "x" + std::to_string(expected->width) +
                        " image, got " + std::to_string(image.channels()) + "x" +
                        std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
}

const char* to_string(OracleKind kind) noexcept {
  switch (kind) {
    case OracleKind::Builtin: return "builtin";
    case OracleKind::Linear: return "linear";
    case OracleKind::Process: return "process";
    case OracleKind::Tcp: return "tcp";
  }
  return "?";
}

PixelProbeOracle::PixelProbeOracle()
    : descriptor_{OracleKind::Builtin, "pixel-probe", 2, true, std::nullopt} {}

ProbVector PixelProbeOracle::query(const ImageTensor& image) {
  const double p = image.at(0, 0, 0);
  return {p, 1.0 - p};
}

// -- linear model ------------------------------------------------------------

void LinearModel::validate() const {
  if (num_classes < 2) throw InvalidModel("linear model needs at least 2 classes");
  if (shape.channels == 0 || shape.height == 0 || shape.width == 0) {
    throw InvalidModel("linear model input shape must be positive");
  }
  if (weights.size() != num_classes * shape.size()) {
    throw InvalidModel("linear model weight count does not match classes x inputs");
  }
  if (bias.size() != num_classes) throw InvalidModel("linear model bias count does not match classes");
}

LinearModel LinearModel::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderLen || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0) {
    throw InvalidModel("not a PIXLW1 model");
  }
  LinearModel m;
  const auto* p = bytes.data() + kMagicLen;
  m.num_classes = get_u32(p);
  m.shape = {get_u32(p + 4), get_u32(p + 8), get_u32(p + 12)};
  const std::size_t inputs = m.shape.size();
  const std::size_t expected = kHeaderLen + 4 * (m.num_classes * inputs + m.num_classes);
  if (bytes.size() != expected) {
    throw InvalidModel("model payload is " + std::to_string(bytes.size()) + " bytes, expected " +
                       std::to_string(expected));
  }
  p = bytes.data() + kHeaderLen;
  m.weights.resize(m.num_classes * inputs);
  for (auto& w : m.weights) {
    w = get_f32(p);
    p += 4;
  }
  m.bias.resize(m.num_classes);
  for (auto& b : m.bias) {
    b = get_f32(p);
    p += 4;
  }
  m.validate();
  return m;
}

std::vector<std::uint8_t> LinearModel::to_bytes() const {
  validate();
  std::vector<std::uint8_t> out(kMagic, kMagic + kMagicLen);
  put_u32(out, static_cast<std::uint32_t>(num_classes));
  put_u32(out, static_cast<std::uint32_t>(shape.channels));
  put_u32(out, static_cast<std::uint32_t>(shape.height));
  put_u32(out, static_cast<std::uint32_t>(shape.width));
  for (float w : weights) put_f32(out, w);
  for (float b : bias) put_f32(out, b);
  return out;
}

LinearModel LinearModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidModel("cannot open model " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(bytes);
}

void LinearModel::save(const std::filesystem::path& path) const {
  const auto bytes = to_bytes();
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidModel("cannot write model " + path.string());
}

ProbVector linear_softmax_classify(std::span<const float> weights, std::span<const float> bias,
                                   const ImageTensor& image) {
  const auto x = image.data();
  if (bias.empty() || weights.size() != bias.size() * x.size()) {
    throw ShapeMismatch("linear model dimensions do not match the image");
  }
  ProbVector logits(bias.size());
  for (std::size_t k = 0; k < bias.size(); ++k) {
    const auto row = weights.subspan(k * x.size(), x.size());
    double acc = bias[k];
    for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<double>(row[i]) * x[i];
    logits[k] = acc;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (auto& v : logits) {
    v = std::exp(v - top);
    sum += v;
  }
  for (auto& v : logits) v /= sum;
  return logits;
}

LinearOracle::LinearOracle(LinearModel model, std::string source) : model_(std::move(model)) {
  model_.validate();
  descriptor_ = {OracleKind::Linear, std::move(source), model_.num_classes, true, model_.shape};
}

ProbVector LinearOracle::query(const ImageTensor& image) {
  check_shape(image);
  return linear_softmax_classify(model_.weights, model_.bias, image);
}

// -- remote ------------------------------------------------------------------

RemoteOracle::RemoteOracle(std::unique_ptr<Transport> transport, OracleKind kind, std::string target)
    : transport_(std::move(transport)) {
  const Hello hello = handshake(*transport_);
  descriptor_ = {kind, std::move(target), hello.num_classes, hello.concurrent, hello.shape};
}

ProbVector RemoteOracle::query(const ImageTensor& image) {
  check_shape(image);
  std::lock_guard lock(mutex_);
  const std::uint64_t id = next_id_++;
  transport_->write_line(format_query(id, image));
  return parse_response(transport_->read_line(), id, descriptor_.num_classes);
}

// -- factory -----------------------------------------------------------------

OracleDescriptor parse_oracle_spec(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos || colon + 1 == spec.size()) {
    throw ConfigError("oracle must look like builtin:NAME, linear:PATH, process:CMD or tcp:ADDR");
  }
  const auto scheme = spec.substr(0, colon);
  OracleDescriptor d;
  d.target = std::string(spec.substr(colon + 1));
  if (scheme == "builtin") {
    d.kind = OracleKind::Builtin;
  } else if (scheme == "linear") {
    d.kind = OracleKind::Linear;
  } else if (scheme == "process") {
    d.kind = OracleKind::Process;
  } else if (scheme == "tcp") {
    d.kind = OracleKind::Tcp;
  } else {
    throw ConfigError("unknown oracle kind '" + std::string(scheme) + "'");
  }
  return d;
}

std::unique_ptr<Oracle> make_oracle(std::string_view spec) {
  const auto d = parse_oracle_spec(spec);
  switch (d.kind) {
    case OracleKind::Builtin:
      if (d.target == "pixel-probe") return std::make_unique<PixelProbeOracle>();
      throw ConfigError("unknown builtin oracle '" + d.target + "'");
    case OracleKind::Linear:
      return std::make_unique<LinearOracle>(LinearModel::load(d.target), d.target);
    case OracleKind::Process:
      return std::make_unique<RemoteOracle>(std::make_unique<ProcessTransport>(d.target),
                                            OracleKind::Process, d.target);
    case OracleKind::Tcp:
      return std::make_unique<RemoteOracle>(std::make_unique<TcpTransport>(d.target),
                                            OracleKind::Tcp, d.target);
  }
  throw ConfigError("unhandled oracle kind");
}

}  // namespace pixle
