#include "ergogame/model_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <vector>

namespace ergogame {
namespace {

std::string at(const std::string& where, std::size_t k) {
  return where + "[" + std::to_string(k) + "]";
}

std::string pair_name(StateIndex i, std::size_t a, std::size_t b) {
  std::ostringstream os;
  os << "(" << i << "," << a << "," << b << ")";
  return os.str();
}

Json reals(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(x);
  return out;
}

std::vector<double> read_reals(const Json& v, std::size_t n,
                               const std::string& where) {
  if (!v.is_array()) throw FormatError(where + ": expected an array");
  if (v.size() != n) {
    throw FormatError(where + ": expected " + std::to_string(n) + " entries");
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = require_number(v[k], at(where, k));
  return out;
}

std::vector<std::string> read_labels(const Json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) {
    throw FormatError(where + ": expected a nonempty array of labels");
  }
  std::vector<std::string> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_string()) throw FormatError(at(where, k) + ": expected a string");
    out.push_back(v[k].get<std::string>());
  }
  return out;
}

Json lyapunov_to_json(const LyapunovData& l) {
  Json j;
  j["V"] = reals(l.lyapunov);
  if (l.mode == DriftMode::bounded_cost) {
    j["gamma_hat"] = l.uniform_drift_rate;
  } else {
    j["lhat"] = reals(l.drift_rate);
  }
  j["C"] = l.drift_constant;
  j["K_hat"] = l.drift_set;
  j["b0"] = l.growth_slope;
  j["b1"] = l.growth_offset;
  j["b2"] = l.rate_bound;
  j["V_tilde"] = reals(l.explosion_lyapunov);
  if (!l.lyapunov_beyond.empty()) j["V_beyond"] = reals(l.lyapunov_beyond);
  if (!l.explosion_lyapunov_beyond.empty()) {
    j["V_tilde_beyond"] = reals(l.explosion_lyapunov_beyond);
  }
  return j;
}

LyapunovData lyapunov_from_json(const Json& j, std::size_t n,
                                const std::string& where) {
  LyapunovData l;
  l.lyapunov = read_reals(require_key(j, "V", where), n, where + ".V");
  const bool has_lhat = j.contains("lhat");
  const bool has_gamma = j.contains("gamma_hat");
  if (has_lhat == has_gamma) {
    throw FormatError(where + ": exactly one of \"lhat\" and \"gamma_hat\" "
                              "is required");
  }
  if (has_lhat) {
    l.mode = DriftMode::unbounded_cost;
    l.drift_rate = read_reals(j["lhat"], n, where + ".lhat");
  } else {
    l.mode = DriftMode::bounded_cost;
    l.uniform_drift_rate = require_number(j["gamma_hat"], where + ".gamma_hat");
  }
  l.drift_constant = require_number(require_key(j, "C", where), where + ".C");
  const Json& k = require_key(j, "K_hat", where);
  if (!k.is_array()) throw FormatError(where + ".K_hat: expected an array");
  for (std::size_t s = 0; s < k.size(); ++s) {
    const std::size_t i = require_index(k[s], at(where + ".K_hat", s));
    if (i >= n) throw FormatError(at(where + ".K_hat", s) + ": out of range");
    l.drift_set.push_back(i);
  }
  l.growth_slope = require_number(require_key(j, "b0", where), where + ".b0");
  l.growth_offset = require_number(require_key(j, "b1", where), where + ".b1");
  l.rate_bound = require_number(require_key(j, "b2", where), where + ".b2");
  l.explosion_lyapunov =
      read_reals(require_key(j, "V_tilde", where), n, where + ".V_tilde");
  if (j.contains("V_beyond")) {
    l.lyapunov_beyond = read_reals(j["V_beyond"], n, where + ".V_beyond");
  }
  if (j.contains("V_tilde_beyond")) {
    l.explosion_lyapunov_beyond =
        read_reals(j["V_tilde_beyond"], n, where + ".V_tilde_beyond");
  }
  return l;
}

}  // namespace

Json model_to_json(const GameModel& model, const LyapunovData* lyap) {
  const std::size_t n = model.num_states();
  Json doc;
  doc["meta"] = {{"name", model.name()},
                 {"reference_state", model.reference_state()},
                 {"conceptually_infinite", model.conceptually_infinite()}};
  doc["states"] = n;
  Json aa = Json::array(), bb = Json::array();
  for (StateIndex i = 0; i < n; ++i) {
    aa.push_back(model.actions_a(i));
    bb.push_back(model.actions_b(i));
  }
  doc["actions_a"] = std::move(aa);
  doc["actions_b"] = std::move(bb);
  Json rates = Json::array(), cost = Json::array();
  for (StateIndex i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < model.num_actions_a(i); ++a) {
      for (std::size_t b = 0; b < model.num_actions_b(i); ++b) {
        const ActionPairData& p = model.pair(i, a, b);
        // Diagonal written explicitly, in index order, so loading is exact.
        Json entries = Json::array();
        bool placed = false;
        for (const auto& e : p.jumps) {
          if (!placed && e.j > i) {
            entries.push_back({{"j", i}, {"q", p.diagonal}});
            placed = true;
          }
          entries.push_back({{"j", e.j}, {"q", e.q}});
        }
        if (!placed) entries.push_back({{"j", i}, {"q", p.diagonal}});
        Json r = {{"i", i}, {"a_idx", a}, {"b_idx", b}};
        r["entries"] = std::move(entries);
        if (p.escape != 0.0) r["escape"] = p.escape;
        rates.push_back(std::move(r));
        cost.push_back({{"i", i}, {"a_idx", a}, {"b_idx", b}, {"c", p.cost}});
      }
    }
  }
  doc["rates"] = std::move(rates);
  doc["cost"] = std::move(cost);
  if (lyap) doc["lyapunov"] = lyapunov_to_json(*lyap);
  return doc;
}

GameModel model_from_json(const Json& doc, std::optional<LyapunovData>* lyap,
                          double row_tol, const std::string& source) {
  if (!doc.is_object()) throw FormatError(source + ": expected an object");
  const Json& meta = require_key(doc, "meta", source);
  const std::size_t n =
      require_index(require_key(doc, "states", source), source + ".states");
  if (n == 0) throw FormatError(source + ".states: must be positive");

  GameModelBuilder builder(n);
  if (meta.contains("name")) {
    if (!meta["name"].is_string()) {
      throw FormatError(source + ".meta.name: expected a string");
    }
    builder.name(meta["name"].get<std::string>());
  }
  const std::size_t i0 = require_index(
      require_key(meta, "reference_state", source + ".meta"),
      source + ".meta.reference_state");
  if (i0 >= n) {
    throw FormatError(source + ".meta.reference_state: out of range");
  }
  builder.reference_state(i0);
  if (meta.contains("conceptually_infinite")) {
    if (!meta["conceptually_infinite"].is_boolean()) {
      throw FormatError(source +
                        ".meta.conceptually_infinite: expected a boolean");
    }
    builder.conceptually_infinite(meta["conceptually_infinite"].get<bool>());
  }

  const Json& aa = require_key(doc, "actions_a", source);
  const Json& bb = require_key(doc, "actions_b", source);
  if (!aa.is_array() || aa.size() != n) {
    throw FormatError(source + ".actions_a: expected one entry per state");
  }
  if (!bb.is_array() || bb.size() != n) {
    throw FormatError(source + ".actions_b: expected one entry per state");
  }
  std::vector<std::size_t> offset(n + 1, 0);
  std::vector<std::size_t> nb(n);
  for (StateIndex i = 0; i < n; ++i) {
    auto la = read_labels(aa[i], at(source + ".actions_a", i));
    auto lb = read_labels(bb[i], at(source + ".actions_b", i));
    nb[i] = lb.size();
    offset[i + 1] = offset[i] + la.size() * lb.size();
    builder.actions(i, std::move(la), std::move(lb));
  }

  // Each action pair needs exactly one record in `rates` and in `cost`.
  auto locate = [&](const Json& rec, const std::string& where,
                    std::vector<char>& seen) {
    const StateIndex i = require_index(require_key(rec, "i", where), where + ".i");
    if (i >= n) throw FormatError(where + ".i: state out of range");
    const std::size_t a =
        require_index(require_key(rec, "a_idx", where), where + ".a_idx");
    const std::size_t b =
        require_index(require_key(rec, "b_idx", where), where + ".b_idx");
    if (b >= nb[i] || offset[i] + a * nb[i] + b >= offset[i + 1]) {
      throw FormatError(where + ": action pair " + pair_name(i, a, b) +
                        " out of range");
    }
    char& s = seen[offset[i] + a * nb[i] + b];
    if (s) {
      throw FormatError(where + ": duplicate record for " + pair_name(i, a, b));
    }
    s = 1;
    return std::array<std::size_t, 3>{i, a, b};
  };
  auto require_all = [&](const std::vector<char>& seen, const std::string& key) {
    for (StateIndex i = 0; i < n; ++i) {
      for (std::size_t k = offset[i]; k < offset[i + 1]; ++k) {
        if (!seen[k]) {
          const std::size_t local = k - offset[i];
          throw FormatError(source + "." + key + ": no record for " +
                            pair_name(i, local / nb[i], local % nb[i]));
        }
      }
    }
  };

  const Json& rates = require_key(doc, "rates", source);
  if (!rates.is_array()) throw FormatError(source + ".rates: expected an array");
  std::vector<char> seen(offset[n], 0);
  for (std::size_t r = 0; r < rates.size(); ++r) {
    const std::string where = at(source + ".rates", r);
    const auto [i, a, b] = locate(rates[r], where, seen);
    const Json& entries = require_key(rates[r], "entries", where);
    if (!entries.is_array()) {
      throw FormatError(where + ".entries: expected an array");
    }
    std::vector<RateEntry> row;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const std::string w = at(where + ".entries", k);
      const StateIndex j = require_index(require_key(entries[k], "j", w), w + ".j");
      if (j >= n) throw FormatError(w + ".j: state out of range");
      row.push_back({j, require_number(require_key(entries[k], "q", w), w + ".q")});
    }
    double escape = 0.0;
    if (rates[r].contains("escape")) {
      escape = require_number(rates[r]["escape"], where + ".escape");
    }
    builder.rates(i, a, b, row, escape);
  }
  require_all(seen, "rates");

  const Json& cost = require_key(doc, "cost", source);
  if (!cost.is_array()) throw FormatError(source + ".cost: expected an array");
  std::fill(seen.begin(), seen.end(), 0);
  for (std::size_t r = 0; r < cost.size(); ++r) {
    const std::string where = at(source + ".cost", r);
    const auto [i, a, b] = locate(cost[r], where, seen);
    builder.cost(i, a, b,
                 require_number(require_key(cost[r], "c", where), where + ".c"));
  }
  require_all(seen, "cost");

  GameModel model = builder.build();
  // Row-level checks only; reachability and irreducibility are reported by
  // validate_model, not enforced at load time.
  for (const Violation& v : validate_model(model, row_tol).violations) {
    if (v.kind == "non-conservative row" || v.kind == "negative off-diagonal" ||
        v.kind == "negative escape" || v.kind == "unstable row" ||
        v.kind == "escape on finite model") {
      throw ModelError(source + ": " + v.message);
    }
  }

  if (lyap) {
    lyap->reset();
    if (doc.contains("lyapunov")) {
      *lyap = lyapunov_from_json(doc["lyapunov"], n, source + ".lyapunov");
    }
  }
  return model;
}

GameModel load_model(const std::string& path,
                     std::optional<LyapunovData>* lyap) {
  return model_from_json(read_json_file(path), lyap, 1e-12, path);
}

void save_model(const GameModel& model, const std::string& path,
                const LyapunovData* lyap) {
  write_text_file(path, to_json_text(model_to_json(model, lyap)));
}

}  // namespace ergogame
