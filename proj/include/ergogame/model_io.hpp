#ifndef ERGOGAME_MODEL_IO_HPP_
#define ERGOGAME_MODEL_IO_HPP_

#include <optional>
#include <string>

#include "ergogame/json_io.hpp"
#include "ergogame/model.hpp"

namespace ergogame {

// Model file layout:
//   meta      {name, reference_state, conceptually_infinite}
//   states    count
//   actions_a, actions_b   per-state label arrays
//   rates     [{i, a_idx, b_idx, entries: [{j, q}], escape?}], one record per
//             action pair; a missing diagonal is rebuilt from the row sum
//   cost      [{i, a_idx, b_idx, c}], one record per action pair
//   lyapunov  optional {V, lhat | gamma_hat, C, K_hat, b0, b1, b2, V_tilde,
//             V_beyond?, V_tilde_beyond?}
Json model_to_json(const GameModel& model, const LyapunovData* lyap = nullptr);

// Throws FormatError naming the key path, or ModelError naming (i,a,b) for a
// row that is not conservative within `row_tol` relative, has a negative
// off-diagonal rate, or a negative escape rate.
GameModel model_from_json(const Json& doc,
                          std::optional<LyapunovData>* lyap = nullptr,
                          double row_tol = 1e-12,
                          const std::string& source = "model");

GameModel load_model(const std::string& path,
                     std::optional<LyapunovData>* lyap = nullptr);
void save_model(const GameModel& model, const std::string& path,
                const LyapunovData* lyap = nullptr);

}  // namespace ergogame

#endif  // ERGOGAME_MODEL_IO_HPP_
