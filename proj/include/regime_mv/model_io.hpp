#ifndef REGIME_MV_MODEL_IO_HPP
#define REGIME_MV_MODEL_IO_HPP

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "regime_mv/market_model.hpp"

namespace regime_mv {

// Model file schema (JSON). Top-level keys: ell, m, n1, horizon, generator,
// rate, drift, vol, jump_components, shock, delta. Coefficient tables are
// arrays of {t_from, value} breakpoints; shock maps "i,j" ordered-pair keys
// (1-based regimes) to tables.
MarketModel parse_model(const nlohmann::ordered_json& j);
nlohmann::ordered_json model_to_json(const MarketModel& model);

MarketModel load_model(const std::string& path);
void save_model(const MarketModel& model, const std::string& path);

} // namespace regime_mv

#endif
