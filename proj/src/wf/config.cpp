// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/wf/config.hpp"

#include "moonlet/errors.hpp"

namespace moonlet::wf {

NetworkConfig NetworkConfig::desk() { return {}; }

NetworkConfig NetworkConfig::full() {
  NetworkConfig c;
  c.globe.embedding_dim = 128;
  c.globe.message_dim = 64;
  c.globe.atom_layers = 3;
  c.globe.orbital_layers = 3;
  c.globe.filter_hidden = 64;
  c.globe.filter_ranges = 16;
  c.globe.head_hidden = 128;
  c.moon.hidden_dim = 256;
  c.moon.ee_dim = 32;
  c.moon.updates = 4;
  c.moon.filter_hidden = 16;
  c.moon.filter_ranges = 8;
  c.moon.jastrow_hidden = 256;
  c.moon.determinants = 16;
  return c;
}

NetworkConfig NetworkConfig::preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "full") return full();
  throw ConfigError("unknown network preset '" + name + "' (expected desk or full)");
}

nlohmann::json to_json(const NetworkConfig& c) {
  const GlobeConfig& g = c.globe;
  const MoonConfig& m = c.moon;
  return {{"globe",
           {{"embedding_dim", g.embedding_dim},
            {"message_dim", g.message_dim},
            {"atom_layers", g.atom_layers},
            {"orbital_layers", g.orbital_layers},
            {"filter_hidden", g.filter_hidden},
            {"filter_ranges", g.filter_ranges},
            {"head_hidden", g.head_hidden},
            {"range_min", g.range_min},
            {"range_max", g.range_max}}},
          {"moon",
           {{"hidden_dim", m.hidden_dim},
            {"ee_dim", m.ee_dim},
            {"updates", m.updates},
            {"filter_hidden", m.filter_hidden},
            {"filter_ranges", m.filter_ranges},
            {"jastrow_hidden", m.jastrow_hidden},
            {"determinants", m.determinants},
            {"range_min", m.range_min},
            {"range_max", m.range_max}}}};
}

NetworkConfig network_from_json(const nlohmann::json& doc) {
  NetworkConfig c;
  try {
    const auto& g = doc.at("globe");
    c.globe.embedding_dim = g.at("embedding_dim").get<int>();
    c.globe.message_dim = g.at("message_dim").get<int>();
    c.globe.atom_layers = g.at("atom_layers").get<int>();
    c.globe.orbital_layers = g.at("orbital_layers").get<int>();
    c.globe.filter_hidden = g.at("filter_hidden").get<int>();
    c.globe.filter_ranges = g.at("filter_ranges").get<int>();
    c.globe.head_hidden = g.at("head_hidden").get<int>();
    c.globe.range_min = g.at("range_min").get<double>();
    c.globe.range_max = g.at("range_max").get<double>();
    const auto& m = doc.at("moon");
    c.moon.hidden_dim = m.at("hidden_dim").get<int>();
    c.moon.ee_dim = m.at("ee_dim").get<int>();
    c.moon.updates = m.at("updates").get<int>();
    c.moon.filter_hidden = m.at("filter_hidden").get<int>();
    c.moon.filter_ranges = m.at("filter_ranges").get<int>();
    c.moon.jastrow_hidden = m.at("jastrow_hidden").get<int>();
    c.moon.determinants = m.at("determinants").get<int>();
    c.moon.range_min = m.at("range_min").get<double>();
    c.moon.range_max = m.at("range_max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("network configuration: ") + e.what());
  }
  return c;
}

}  // namespace moonlet::wf
