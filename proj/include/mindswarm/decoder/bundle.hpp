#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <string>

#include "mindswarm/decoder/pipeline.hpp"
#include "mindswarm/eeg/container.hpp"

// Pipeline bundle, little-endian:
//   "BCIP" | u16 version | u32 header length | JSON header | u32 block count |
//   blocks of (u16 name length | name | u32 rows | u32 cols | f32 row-major)
namespace mindswarm::decoder {

inline constexpr char kBundleMagic[4] = {'B', 'C', 'I', 'P'};
inline constexpr std::uint16_t kBundleVersion = 1;

namespace detail {

using Blocks = std::map<std::string, Eigen::MatrixXd>;

inline void write_block(std::ostream& os, const std::string& name, const Eigen::MatrixXd& m) {
  eeg::io::put<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  eeg::io::put<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
  eeg::io::put<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) eeg::io::put<float>(os, static_cast<float>(m(r, c)));
}

inline const Eigen::MatrixXd& block(const Blocks& blocks, const std::string& name) {
  auto it = blocks.find(name);
  require(it != blocks.end(), Errc::malformed, "bundle lacks block '" + name + "'");
  return it->second;
}

inline Eigen::VectorXd column(const Blocks& blocks, const std::string& name) {
  const auto& m = block(blocks, name);
  require(m.cols() == 1, Errc::malformed, "block '" + name + "' is not a column");
  return m.col(0);
}

}  // namespace detail

inline void save_pipeline(const OvrPipeline& p, std::ostream& os) {
  nlohmann::json header;
  header["paradigm"] = to_string(p.paradigm);
  header["classes"] = p.classes;
  header["config"] = {{"n_pairs", p.config.n_pairs},
                      {"lda_shrinkage", p.config.lda.shrinkage},
                      {"lda_auto_shrinkage", p.config.lda.auto_shrinkage},
                      {"chain", p.config.chain}};
  header["window"] = {p.window.start_s, p.window.end_s};
  header["fs"] = p.sample_rate;
  header["channels"] = p.channels;
  header["n_times"] = p.n_times;
  header["seed"] = p.seed;
  header["trained_at"] = p.trained_at;

  detail::Blocks blocks;
  auto models = nlohmann::json::array();
  for (const auto& m : p.models) {
    const std::string key = m.csp.target_class;
    models.push_back({{"class", key},
                      {"bias", m.lda.bias},
                      {"shrinkage", m.lda.shrinkage},
                      {"ridge_applied", m.lda.ridge_applied},
                      {"n_pairs", m.csp.n_pairs},
                      {"composite_rank", m.csp.composite_rank},
                      {"reduced_rank", m.csp.reduced_rank}});
    blocks["csp/" + key + "/filters"] = m.csp.filters;
    blocks["csp/" + key + "/eigenvalues"] = m.csp.eigenvalues;
    blocks["lda/" + key + "/weights"] = m.lda.weights;
    blocks["lda/" + key + "/mean_pos"] = m.lda.mean_pos;
    blocks["lda/" + key + "/mean_neg"] = m.lda.mean_neg;
  }
  header["models"] = std::move(models);
  if (p.ica) {
    const auto& im = p.ica->model;
    header["ica"] = {{"flagged", p.ica->flagged},
                     {"n_components", im.n_components},
                     {"rank", im.rank},
                     {"converged", im.converged},
                     {"iterations", im.convergence_iterations}};
    blocks["ica/mean"] = im.mean;
    blocks["ica/whitener"] = im.whitener;
    blocks["ica/unmixing"] = im.unmixing;
    blocks["ica/mixing"] = im.mixing;
  }

  const std::string text = header.dump();
  os.write(kBundleMagic, 4);
  eeg::io::put<std::uint16_t>(os, kBundleVersion);
  eeg::io::put<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  eeg::io::put<std::uint32_t>(os, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& [name, m] : blocks) detail::write_block(os, name, m);
  require(os.good(), Errc::io, "bundle write failed");
}

inline OvrPipeline load_pipeline(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  require(is.gcount() == 4, Errc::truncated, "file shorter than magic");
  require(std::memcmp(magic, kBundleMagic, 4) == 0, Errc::bad_magic, "not a BCIP pipeline bundle");
  const auto version = eeg::io::get<std::uint16_t>(is, "version");
  require(version == kBundleVersion, Errc::version_mismatch,
          "bundle version " + std::to_string(version) + ", expected " + std::to_string(kBundleVersion));
  const auto header_len = eeg::io::get<std::uint32_t>(is, "header length");
  const auto header = nlohmann::json::parse(eeg::io::get_bytes(is, header_len, "header"), nullptr, false);
  require(!header.is_discarded() && header.is_object(), Errc::malformed, "bundle header is not a JSON object");

  detail::Blocks blocks;
  const auto n_blocks = eeg::io::get<std::uint32_t>(is, "block count");
  for (std::uint32_t b = 0; b < n_blocks; ++b) {
    const auto name_len = eeg::io::get<std::uint16_t>(is, "block name length");
    const auto name = eeg::io::get_bytes(is, name_len, "block name");
    const auto rows = eeg::io::get<std::uint32_t>(is, "block rows");
    const auto cols = eeg::io::get<std::uint32_t>(is, "block cols");
    require(static_cast<std::uint64_t>(rows) * cols <= (1ull << 28), Errc::malformed, "block '" + name + "' too large");
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = eeg::io::get<float>(is, "block payload");
    blocks[name] = std::move(m);
  }

  OvrPipeline p;
  try {
    p.paradigm = paradigm_from_string(header.at("paradigm").get<std::string>());
    p.classes = header.at("classes").get<std::vector<std::string>>();
    const auto& cfg = header.at("config");
    p.config.n_pairs = cfg.at("n_pairs").get<std::size_t>();
    p.config.lda.shrinkage = cfg.at("lda_shrinkage").get<double>();
    p.config.lda.auto_shrinkage = cfg.at("lda_auto_shrinkage").get<bool>();
    p.config.chain = cfg.at("chain").get<ChainConfig>();
    p.window = {header.at("window").at(0).get<double>(), header.at("window").at(1).get<double>()};
    p.sample_rate = header.at("fs").get<double>();
    p.channels = header.at("channels").get<std::vector<std::string>>();
    p.n_times = header.at("n_times").get<Eigen::Index>();
    p.seed = header.at("seed").get<std::uint64_t>();
    p.trained_at = header.at("trained_at").get<std::string>();
    for (const auto& mj : header.at("models")) {
      ClassModel m;
      const auto key = mj.at("class").get<std::string>();
      m.csp.target_class = key;
      m.csp.n_pairs = mj.at("n_pairs").get<std::size_t>();
      m.csp.composite_rank = mj.at("composite_rank").get<std::size_t>();
      m.csp.reduced_rank = mj.at("reduced_rank").get<bool>();
      m.csp.filters = detail::block(blocks, "csp/" + key + "/filters");
      m.csp.eigenvalues = detail::column(blocks, "csp/" + key + "/eigenvalues");
      m.lda.weights = detail::column(blocks, "lda/" + key + "/weights");
      m.lda.mean_pos = detail::column(blocks, "lda/" + key + "/mean_pos");
      m.lda.mean_neg = detail::column(blocks, "lda/" + key + "/mean_neg");
      m.lda.bias = mj.at("bias").get<double>();
      m.lda.shrinkage = mj.at("shrinkage").get<double>();
      m.lda.ridge_applied = mj.at("ridge_applied").get<bool>();
      require(m.csp.filters.rows() == static_cast<Eigen::Index>(2 * m.csp.n_pairs) &&
                  m.lda.weights.size() == m.csp.filters.rows(),
              Errc::malformed, "model '" + key + "' has inconsistent dimensions");
      p.models.push_back(std::move(m));
    }
    if (header.contains("ica")) {
      const auto& ij = header["ica"];
      IcaStage stage;
      stage.flagged = ij.at("flagged").get<std::vector<std::size_t>>();
      stage.model.n_components = ij.at("n_components").get<std::size_t>();
      stage.model.rank = ij.at("rank").get<std::size_t>();
      stage.model.converged = ij.at("converged").get<bool>();
      stage.model.convergence_iterations = ij.at("iterations").get<int>();
      stage.model.mean = detail::column(blocks, "ica/mean");
      stage.model.whitener = detail::block(blocks, "ica/whitener");
      stage.model.unmixing = detail::block(blocks, "ica/unmixing");
      stage.model.mixing = detail::block(blocks, "ica/mixing");
      p.ica = std::move(stage);
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(Errc::malformed, std::string("bundle header: ") + ex.what());
  }
  require(p.models.size() == p.classes.size() && !p.models.empty(), Errc::malformed,
          "bundle has " + std::to_string(p.models.size()) + " models for " + std::to_string(p.classes.size()) +
              " classes");
  for (std::size_t k = 0; k < p.classes.size(); ++k)
    require(p.models[k].csp.target_class == p.classes[k], Errc::malformed, "model order differs from class list");
  return p;
}

inline void save_pipeline(const OvrPipeline& p, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(os.is_open(), Errc::io, "cannot open '" + path + "' for writing");
  save_pipeline(p, os);
}

inline OvrPipeline load_pipeline(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.is_open(), Errc::io, "cannot open '" + path + "'");
  return load_pipeline(is);
}

}  // namespace mindswarm::decoder
