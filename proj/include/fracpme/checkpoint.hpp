// State checkpointing and the JSON representations of the core configuration
// types. A checkpoint is one line of JSON (format tag, manifold, solver
// config, time) followed by the spectral coefficients of the state as raw
// little-endian (re, im) double pairs in flat slot order. The layout is
// documented in the README and is stable: readers reject unknown format tags.

#ifndef FRACPME_CHECKPOINT_HPP
#define FRACPME_CHECKPOINT_HPP

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "fracpme/fractional.hpp"
#include "fracpme/manifold.hpp"
#include "fracpme/random_fields.hpp"
#include "fracpme/solver.hpp"

namespace fracpme {

inline void to_json(nlohmann::json& j, const ManifoldSpec& s) {
  j = {{"dim", s.dim},
       {"periods", s.periods},
       {"grid", s.grid},
       {"volume_normalized", s.volume_normalized}};
}

inline void from_json(const nlohmann::json& j, ManifoldSpec& s) {
  s = make_torus(j.at("dim").get<int>(), j.at("periods").get<std::vector<double>>(),
                 j.at("grid").get<std::vector<int>>(), j.value("volume_normalized", false));
}

inline void to_json(nlohmann::json& j, const FracParams& fp) {
  j = {{"sigma", fp.sigma}, {"omega", fp.omega}};
}

inline void from_json(const nlohmann::json& j, FracParams& fp) {
  fp.sigma = j.at("sigma").get<double>();
  fp.omega = j.value("omega", 0.0);
  validate(fp);
}

inline void to_json(nlohmann::json& j, const PMEConfig& cfg) {
  j = {{"m", cfg.m},
       {"frac", cfg.frac},
       {"horizon", cfg.horizon},
       {"steps", cfg.steps},
       {"newton_tol", cfg.newton_tol},
       {"newton_max_iter", cfg.newton_max_iter},
       {"cg_max_iter", cfg.cg_max_iter},
       {"oversample_nonlinearity", cfg.oversample_nonlinearity},
       {"record_times", cfg.record_times}};
}

inline void from_json(const nlohmann::json& j, PMEConfig& cfg) {
  cfg = PMEConfig{};
  cfg.m = j.at("m").get<double>();
  cfg.frac = j.at("frac").get<FracParams>();
  cfg.horizon = j.at("horizon").get<double>();
  cfg.steps = j.at("steps").get<int>();
  cfg.newton_tol = j.value("newton_tol", cfg.newton_tol);
  cfg.newton_max_iter = j.value("newton_max_iter", cfg.newton_max_iter);
  cfg.cg_max_iter = j.value("cg_max_iter", cfg.cg_max_iter);
  cfg.oversample_nonlinearity = j.value("oversample_nonlinearity", false);
  cfg.record_times = j.value("record_times", std::vector<double>{});
  validate(cfg);
}

inline void to_json(nlohmann::json& j, const EnsembleSpec& es) {
  j = {{"band", es.band},
       {"decay", es.decay},
       {"amplitude", es.amplitude},
       {"zero_mean", es.zero_mean},
       {"seed", es.seed}};
}

inline void from_json(const nlohmann::json& j, EnsembleSpec& es) {
  es = EnsembleSpec{};
  es.band = j.value("band", es.band);
  es.decay = j.value("decay", es.decay);
  es.amplitude = j.value("amplitude", es.amplitude);
  es.zero_mean = j.value("zero_mean", false);
  es.seed = j.at("seed").get<std::uint64_t>();
}

namespace detail {

constexpr const char* kCheckpointFormat = "fracpme-checkpoint-v1";

inline void write_double_le(std::ostream& os, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

inline double read_double_le(std::istream& is) {
  char buf[8];
  is.read(buf, 8);
  if (!is) throw std::runtime_error("checkpoint: truncated coefficient payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

struct Checkpoint {
  Field state;
  PMEConfig config;
  double time = 0.0;
};

inline void write_checkpoint(std::ostream& os, const Field& state, const PMEConfig& cfg,
                             double time) {
  nlohmann::json header{{"format", detail::kCheckpointFormat},
                        {"manifold", state.spec},
                        {"config", cfg},
                        {"time", time}};
  os << header.dump() << '\n';
  const SpectralField c = forward_transform(state);
  for (const cdouble& z : c.coeffs) {
    detail::write_double_le(os, z.real());
    detail::write_double_le(os, z.imag());
  }
  if (!os) throw std::runtime_error("checkpoint: write failed");
}

inline Checkpoint read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("checkpoint: missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: malformed header: ") + e.what());
  }
  if (header.value("format", "") != detail::kCheckpointFormat)
    throw std::runtime_error("checkpoint: unknown format tag");
  Checkpoint out;
  const ManifoldSpec spec = header.at("manifold").get<ManifoldSpec>();
  out.config = header.at("config").get<PMEConfig>();
  out.time = header.at("time").get<double>();
  SpectralField c(spec);
  for (cdouble& z : c.coeffs) {
    const double re = detail::read_double_le(is);
    const double im = detail::read_double_le(is);
    z = {re, im};
  }
  out.state = inverse_transform(c);
  return out;
}

}  // namespace fracpme

#endif
