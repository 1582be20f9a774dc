#pragma once

#include <random>
#include <string>
#include <vector>

// Random and mutated wire lines for decoder robustness runs.
namespace fuzz {

inline const std::vector<std::string> kSeeds{
    R"({"v":1,"type":"command","paradigm":"MI","label":"left","confidence":0.82,"ts":1500,"seq":7})",
    R"({"v":1,"type":"command","paradigm":"VI","label":"split","confidence":0.9,"ts":10,"seq":8})",
    R"({"v":1,"type":"command","paradigm":"SI","label":"go","confidence":0.4,"ts":11,"seq":9})",
    R"({"v":1,"type":"mode_set","paradigm":"SI","ts":12,"seq":10})",
    R"({"v":1,"type":"ack","paradigm":"MI","label":"left","ts":13,"seq":11})",
    R"({"v":1,"type":"error","reason":"wrong_mode","ts":14,"seq":12})",
    R"({"v":1,"type":"state","tick":3,"agents":[{"id":0,"x":1}],"ts":15,"seq":13})",
};

inline const std::vector<std::string> kTokens{
    "{", "}", "[", "]", ",", ":", "\"", "\\", "null", "true", "-1", "1e309", "0.5", "1.5", "NaN", "\"MI\"", "\"XX\"",
    "\"command\"", "\"seq\"", "18446744073709551616", "\xff", "\xc3\x28", "\x00", "\n", " "};

/// Deterministic corpus of `n` lines (no embedded newlines).
inline std::vector<std::string> corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  const auto pick = [&](std::size_t k) { return std::uniform_int_distribution<std::size_t>(0, k - 1)(rng); };
  std::vector<std::string> out;
  out.reserve(n);
  while (out.size() < n) {
    std::string line;
    switch (pick(6)) {
      case 0: {  // random bytes
        const auto len = pick(200);
        for (std::size_t i = 0; i < len; ++i) line.push_back(static_cast<char>(byte(rng)));
        break;
      }
      case 1: {  // byte flips on a valid line
        line = kSeeds[pick(kSeeds.size())];
        for (std::size_t k = pick(4) + 1; k > 0; --k) line[pick(line.size())] = static_cast<char>(byte(rng));
        break;
      }
      case 2: {  // truncation
        line = kSeeds[pick(kSeeds.size())];
        line.resize(pick(line.size()));
        break;
      }
      case 3: {  // token splices
        line = kSeeds[pick(kSeeds.size())];
        for (std::size_t k = pick(3) + 1; k > 0; --k) line.insert(pick(line.size() + 1), kTokens[pick(kTokens.size())]);
        break;
      }
      case 4: {  // oversized
        line = R"({"v":1,"type":"command","paradigm":"MI","label":"left","confidence":0.9,"ts":1,"seq":1,"pad":")";
        line.append(4000 + pick(3000), 'a');
        line += "\"}";
        break;
      }
      default: {  // valid shape with random field values
        static const char* paradigms[] = {"MI", "VI", "SI", "mi", ""};
        static const char* labels[] = {"left", "split", "go", "stop", "fly", "up"};
        const double conf = std::uniform_real_distribution<double>(-0.5, 1.5)(rng);
        line = std::string(R"({"v":1,"type":"command","paradigm":")") + paradigms[pick(5)] + R"(","label":")" +
               labels[pick(6)] + R"(","confidence":)" + std::to_string(conf) + R"(,"ts":)" + std::to_string(pick(100000)) +
               R"(,"seq":)" + std::to_string(pick(1000)) + "}";
        break;
      }
    }
    for (auto& c : line)
      if (c == '\n') c = ' ';
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace fuzz
