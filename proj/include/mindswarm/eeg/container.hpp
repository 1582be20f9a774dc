#pragma once

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mindswarm/eeg/recording.hpp"

// Recording container, little-endian:
//   "EEGR" | u16 version | u32 header length | JSON header | f32 frames (time-major)
namespace mindswarm::eeg {

inline constexpr char kRecordingMagic[4] = {'E', 'E', 'G', 'R'};
inline constexpr std::uint16_t kRecordingVersion = 1;

namespace io {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is, const char* what) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  require(is.gcount() == static_cast<std::streamsize>(sizeof(T)), Errc::truncated,
          std::string("file ends inside ") + what);
  return value;
}

inline std::string get_bytes(std::istream& is, std::size_t n, const char* what) {
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  require(is.gcount() == static_cast<std::streamsize>(n), Errc::truncated,
          std::string("file ends inside ") + what);
  return s;
}

}  // namespace io

inline void write_recording(const Recording& rec, std::ostream& os) {
  rec.validate();
  nlohmann::json header;
  header["channels"] = rec.layout.names;
  header["reference"] = rec.layout.reference;
  header["ground"] = rec.layout.ground;
  header["fs"] = rec.sample_rate;
  header["n_samples"] = rec.n_samples();
  auto events = nlohmann::json::array();
  for (const auto& e : rec.events)
    events.push_back({{"i", e.sample_index}, {"paradigm", to_string(e.paradigm)}, {"label", e.label}});
  header["events"] = std::move(events);
  const std::string text = header.dump();

  os.write(kRecordingMagic, 4);
  io::put<std::uint16_t>(os, kRecordingVersion);
  io::put<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));

  const auto n_ch = rec.samples.rows();
  std::vector<float> frame(static_cast<std::size_t>(n_ch));
  for (Eigen::Index t = 0; t < rec.samples.cols(); ++t) {
    for (Eigen::Index ch = 0; ch < n_ch; ++ch) frame[ch] = static_cast<float>(rec.samples(ch, t));
    os.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size() * 4));
  }
  require(os.good(), Errc::io, "write failed");
}

inline Recording read_recording(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  require(is.gcount() == 4, Errc::truncated, "file shorter than magic");
  require(std::memcmp(magic, kRecordingMagic, 4) == 0, Errc::bad_magic, "not an EEGR container");
  const auto version = io::get<std::uint16_t>(is, "version");
  require(version == kRecordingVersion, Errc::version_mismatch,
          "container version " + std::to_string(version) + ", expected " + std::to_string(kRecordingVersion));
  const auto header_len = io::get<std::uint32_t>(is, "header length");
  const std::string text = io::get_bytes(is, header_len, "header");

  const auto header = nlohmann::json::parse(text, nullptr, false);
  require(!header.is_discarded() && header.is_object(), Errc::malformed, "header is not a JSON object");
  Recording rec;
  try {
    rec.layout.names = header.at("channels").get<std::vector<std::string>>();
    rec.layout.reference = header.value("reference", std::string("FCz"));
    rec.layout.ground = header.value("ground", std::string("FPz"));
    rec.sample_rate = header.at("fs").get<double>();
    const auto n_samples = header.at("n_samples").get<std::int64_t>();
    require(n_samples >= 0, Errc::malformed, "negative n_samples");
    for (const auto& e : header.at("events")) {
      EventMarker m;
      m.sample_index = e.at("i").get<std::int64_t>();
      m.paradigm = paradigm_from_string(e.at("paradigm").get<std::string>());
      m.label = e.at("label").get<std::string>();
      rec.events.push_back(std::move(m));
    }
    rec.samples.resize(static_cast<Eigen::Index>(rec.layout.size()), n_samples);
  } catch (const nlohmann::json::exception& ex) {
    fail(Errc::malformed, std::string("header: ") + ex.what());
  }

  const auto n_ch = rec.samples.rows();
  std::vector<float> frame(static_cast<std::size_t>(n_ch));
  const auto frame_bytes = static_cast<std::streamsize>(frame.size() * 4);
  for (Eigen::Index t = 0; t < rec.samples.cols(); ++t) {
    is.read(reinterpret_cast<char*>(frame.data()), frame_bytes);
    require(is.gcount() == frame_bytes, Errc::truncated,
            "payload ends at frame " + std::to_string(t) + " of " + std::to_string(rec.samples.cols()));
    for (Eigen::Index ch = 0; ch < n_ch; ++ch) rec.samples(ch, t) = frame[ch];
  }
  rec.validate();
  return rec;
}

inline void write_recording(const Recording& rec, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(os.is_open(), Errc::io, "cannot open '" + path + "' for writing");
  write_recording(rec, os);
}

inline Recording read_recording(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.is_open(), Errc::io, "cannot open '" + path + "'");
  return read_recording(is);
}

/// Rounds every sample to f32, the container's storage precision.
inline void quantize_to_storage(Recording& rec) {
  rec.samples = rec.samples.cast<float>().cast<double>();
}

}  // namespace mindswarm::eeg
