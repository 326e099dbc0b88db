// Stdio oracle server used by the transport tests.
//
//   fake_oracle_server [--model PATH] [--version N] [--classes N] [--shape C,H,W]
//                      [--concurrent] [--bad-sum] [--wrong-id] [--exit-after N]
//
// Without --model it serves the pixel-probe classifier for the declared shape.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "pixle/oracle.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  std::optional<std::string> model_path;
  pixle::Hello hello{pixle::kProtocolVersion, 2, {1, 4, 4}, false};
  long long declared_classes = -1;
  bool bad_sum = false, wrong_id = false;
  long exit_after = -1;

  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << arg << "\n";
        std::exit(2);
      }
      return argv[++i];
    };
    if (arg == "--model") model_path = next();
    else if (arg == "--version") hello.version = std::stoi(next());
    else if (arg == "--classes") declared_classes = std::stoll(next());
    else if (arg == "--shape") {
      const auto s = next();
      std::size_t c = 0, h = 0, w = 0;
      if (std::sscanf(s.c_str(), "%zu,%zu,%zu", &c, &h, &w) != 3) return 2;
      hello.shape = {c, h, w};
    } else if (arg == "--concurrent") hello.concurrent = true;
    else if (arg == "--bad-sum") bad_sum = true;
    else if (arg == "--wrong-id") wrong_id = true;
    else if (arg == "--exit-after") exit_after = std::stol(next());
    else {
      std::cerr << "unknown argument " << arg << "\n";
      return 2;
    }
  }

  std::unique_ptr<pixle::Oracle> oracle;
  try {
    if (model_path) {
      auto model = pixle::LinearModel::load(*model_path);
      hello.num_classes = model.num_classes;
      hello.shape = model.shape;
      oracle = std::make_unique<pixle::LinearOracle>(std::move(model));
    } else {
      oracle = std::make_unique<pixle::PixelProbeOracle>();
    }
  } catch (const std::exception& e) {
    std::cerr << "cannot load model: " << e.what() << "\n";
    return 1;
  }

  json greeting = json::parse(pixle::format_hello(hello));
  if (declared_classes >= 0) greeting["classes"] = declared_classes;
  std::cout << greeting.dump() << std::endl;

  std::string line;
  long answered = 0;
  while (std::getline(std::cin, line)) {
    if (exit_after >= 0 && answered >= exit_after) return 0;
    std::uint64_t id = 0;
    try {
      const json msg = json::parse(line);
      id = msg.at("id").get<std::uint64_t>();
      if (msg.at("type") != "query") throw std::runtime_error("expected a query");
      const auto image = pixle::decode_image_payload(msg.at("image").get<std::string>(), hello.shape);
      auto probs = oracle->query(image);
      if (bad_sum) probs[0] += 0.01;
      std::cout << pixle::format_probs(wrong_id ? id + 1 : id, probs) << std::endl;
    } catch (const std::exception& e) {
      std::cout << pixle::format_error(id, e.what()) << std::endl;
    }
    ++answered;
  }
  return 0;
}
