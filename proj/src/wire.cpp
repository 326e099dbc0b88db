#include <bit>
#include <cmath>

#include <sodium.h>

#include "json.hpp"

#include "pixle/oracle.hpp"

namespace pixle {

using nlohmann::json;

namespace {

json parse_object(std::string_view line) {
  json msg = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (msg.is_discarded() || !msg.is_object()) {
    throw ProtocolError("malformed message: " + std::string(line.substr(0, 120)));
  }
  if (!msg.contains("type") || !msg["type"].is_string()) {
    throw ProtocolError("message has no type field");
  }
  return msg;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  const int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_encoded_len(bytes.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), variant);
  out.pop_back();  // terminating NUL
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t written = 0;
  const char* end = nullptr;
  const int rc = sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &written, &end,
                                   sodium_base64_VARIANT_ORIGINAL);
  if (rc != 0 || end != text.data() + text.size()) throw ProtocolError("invalid base64 payload");
  out.resize(written);
  return out;
}

std::string encode_image_payload(const ImageTensor& image) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(image.data().size() * 4);
  for (float v : image.data()) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return base64_encode(bytes);
}

ImageTensor decode_image_payload(std::string_view base64, const Shape& shape) {
  const auto bytes = base64_decode(base64);
  if (bytes.size() != shape.size() * 4) {
    throw ProtocolError("payload holds " + std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(shape.size() * 4));
  }
  std::vector<float> values(shape.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto* p = bytes.data() + 4 * i;
    const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                               (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
    values[i] = std::bit_cast<float>(bits);
  }
  try {
    return ImageTensor(shape.channels, shape.height, shape.width, std::move(values));
  } catch (const ContractViolation& e) {
    throw ProtocolError(std::string("payload is not a valid image: ") + e.what());
  }
}

Hello parse_hello(std::string_view line) {
  const json msg = parse_object(line);
  if (msg["type"] != "hello") throw ProtocolError("expected hello, got " + msg["type"].get<std::string>());
  Hello hello;
  try {
    hello.version = msg.at("version").get<int>();
    if (hello.version != kProtocolVersion) {
      throw VersionMismatch("server speaks protocol version " + std::to_string(hello.version) +
                            ", client speaks " + std::to_string(kProtocolVersion));
    }
    const auto classes = msg.at("classes").get<long long>();
    const auto& shape = msg.at("shape");
    if (!shape.is_array() || shape.size() != 3) throw ProtocolError("hello shape must be [c,h,w]");
    for (const auto& s : shape) {
      if (!s.is_number_integer() || s.get<long long>() <= 0) {
        throw ProtocolError("hello shape entries must be positive integers");
      }
    }
    if (classes < 2) throw InvalidModel("server declares " + std::to_string(classes) + " classes");
    hello.num_classes = static_cast<std::size_t>(classes);
    hello.shape = {shape[0].get<std::size_t>(), shape[1].get<std::size_t>(), shape[2].get<std::size_t>()};
    if (msg.contains("concurrent")) hello.concurrent = msg["concurrent"].get<bool>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed hello: ") + e.what());
  }
  return hello;
}

std::string format_hello(const Hello& hello) {
  json msg = {{"type", "hello"},
              {"version", hello.version},
              {"classes", hello.num_classes},
              {"shape", {hello.shape.channels, hello.shape.height, hello.shape.width}},
              {"concurrent", hello.concurrent}};
  return msg.dump();
}

std::string format_query(std::uint64_t id, const ImageTensor& image) {
  return json{{"type", "query"}, {"id", id}, {"image", encode_image_payload(image)}}.dump();
}

std::string format_probs(std::uint64_t id, const ProbVector& probs) {
  return json{{"type", "probs"}, {"id", id}, {"probs", probs}}.dump();
}

std::string format_error(std::uint64_t id, std::string_view message) {
  return json{{"type", "error"}, {"id", id}, {"message", message}}.dump();
}

void validate_probs(const ProbVector& probs, std::size_t num_classes, double tolerance) {
  if (probs.size() != num_classes) {
    throw ProtocolError("expected " + std::to_string(num_classes) + " probabilities, got " +
                        std::to_string(probs.size()));
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0 + tolerance) {
      throw ProtocolError("probability " + std::to_string(p) + " outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw ProtocolError("probabilities sum to " + std::to_string(sum));
  }
}

ProbVector parse_response(std::string_view line, std::uint64_t id, std::size_t num_classes) {
  const json msg = parse_object(line);
  try {
    const auto type = msg["type"].get<std::string>();
    const auto got = msg.at("id").get<std::uint64_t>();
    if (got != id) {
      throw ProtocolError("response id " + std::to_string(got) + " does not match request " + std::to_string(id));
    }
    if (type == "error") {
      throw ProtocolError("server error for request " + std::to_string(id) + ": " +
                          msg.value("message", std::string("(no message)")));
    }
    if (type != "probs") throw ProtocolError("unexpected message type " + type);
    auto probs = msg.at("probs").get<ProbVector>();
    validate_probs(probs, num_classes, 1e-3);
    return probs;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
}

}  // namespace pixle
