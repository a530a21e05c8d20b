#include "prumidas/draw_store.hpp"

#include <stdexcept>

namespace prumidas {

DrawStore::DrawStore(const ModelSpec& spec, const SamplerConfig& cfg,
                     const std::string& cfg_hash)
    : spec_(spec), sampler_(cfg), cfg_hash_(cfg_hash),
      store_effects_(cfg.store_random_effects) {
  init_layout();
}

void DrawStore::init_layout() {
  const CoefLayout layout(spec_);
  L_ = layout.dim();
  H_ = spec_.hours_per_day;
  G_ = spec_.n_countries;
  names_.clear();
  for (const auto& n : layout.names()) names_.push_back(n);
  names_.push_back("sigma2");
  for (int h = 0; h < H_; ++h) names_.push_back("lambda_" + std::to_string(h));
  for (int g = 0; g < G_; ++g) names_.push_back("chi_" + std::to_string(g));
  for (const char* b : {"q_mu", "q_alpha", "q_beta", "r_mu", "r_alpha", "r_beta"}) {
    names_.push_back(b);
  }
  if (store_effects_) {
    for (int h = 0; h < H_; ++h) {
      for (const auto& n : layout.names()) {
        names_.push_back("psi_h" + std::to_string(h) + "." + n);
      }
    }
    for (int g = 0; g < G_; ++g) {
      for (const auto& n : layout.names()) {
        names_.push_back("zeta_g" + std::to_string(g) + "." + n);
      }
    }
  }
  n_cols_ = static_cast<int>(names_.size());
}

int DrawStore::col_psi(int h, int k) const {
  if (!store_effects_) throw std::runtime_error("random-effect draws were not stored");
  return L_ + 1 + H_ + G_ + 6 + h * L_ + k;
}

int DrawStore::col_zeta(int g, int k) const {
  if (!store_effects_) throw std::runtime_error("random-effect draws were not stored");
  return L_ + 1 + H_ + G_ + 6 + H_ * L_ + g * L_ + k;
}

void DrawStore::append(const Eigen::VectorXd& row) {
  if (row.size() != n_cols_) throw std::invalid_argument("draw row has wrong width");
  rows_.insert(rows_.end(), row.data(), row.data() + row.size());
}

std::vector<double> DrawStore::column(int col) const {
  std::vector<double> out(n_draws());
  for (int i = 0; i < n_draws(); ++i) out[i] = at(i, col);
  return out;
}

void DrawStore::save(const std::string& basename) const {
  nlohmann::json hdr;
  hdr["schema_version"] = kConfigSchemaVersion;
  hdr["spec"] = spec_;
  hdr["sampler"] = sampler_;
  hdr["config_hash"] = cfg_hash_;
  hdr["store_random_effects"] = store_effects_;
  hdr["n_cols"] = n_cols_;
  hdr["n_draws"] = n_draws();
  hdr["columns"] = names_;
  hdr["data_file"] = basename.substr(basename.find_last_of('/') + 1) + ".bin";
  std::ofstream jf(basename + ".json");
  if (!jf) throw std::runtime_error("cannot write " + basename + ".json");
  jf << hdr.dump(2) << "\n";

  std::ofstream bf(basename + ".bin", std::ios::binary);
  if (!bf) throw std::runtime_error("cannot write " + basename + ".bin");
  bf.write(reinterpret_cast<const char*>(rows_.data()),
           static_cast<std::streamsize>(rows_.size() * sizeof(double)));
  if (!bf) throw std::runtime_error("short write to " + basename + ".bin");
}

DrawStore DrawStore::load(const std::string& basename) {
  std::ifstream jf(basename + ".json");
  if (!jf) throw std::runtime_error("cannot open " + basename + ".json");
  nlohmann::json hdr;
  jf >> hdr;

  DrawStore s;
  s.spec_ = hdr.at("spec").get<ModelSpec>();
  s.sampler_ = hdr.at("sampler").get<SamplerConfig>();
  s.cfg_hash_ = hdr.at("config_hash").get<std::string>();
  s.store_effects_ = hdr.at("store_random_effects").get<bool>();
  s.init_layout();
  if (s.n_cols_ != hdr.at("n_cols").get<int>()) {
    throw std::runtime_error("draw store header is inconsistent with its spec");
  }
  const int n_draws = hdr.at("n_draws").get<int>();
  s.rows_.resize(static_cast<std::size_t>(n_draws) * s.n_cols_);
  std::ifstream bf(basename + ".bin", std::ios::binary);
  if (!bf) throw std::runtime_error("cannot open " + basename + ".bin");
  bf.read(reinterpret_cast<char*>(s.rows_.data()),
          static_cast<std::streamsize>(s.rows_.size() * sizeof(double)));
  if (bf.gcount() != static_cast<std::streamsize>(s.rows_.size() * sizeof(double))) {
    throw std::runtime_error("draw store data file is truncated");
  }
  return s;
}

}  // namespace prumidas
