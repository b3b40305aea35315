// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>
#include <string>

namespace moonlet::wf {

struct GlobeConfig {
  int embedding_dim = 16;
  int message_dim = 8;
  int atom_layers = 1;
  int orbital_layers = 1;
  int filter_hidden = 8;
  int filter_ranges = 4;
  int head_hidden = 16;
  double range_min = 0.5;  ///< initial envelope ranges, log-spaced, bohr
  double range_max = 10.0;
};

struct MoonConfig {
  int hidden_dim = 16;
  int ee_dim = 8;
  int updates = 2;
  int filter_hidden = 8;
  int filter_ranges = 4;
  int jastrow_hidden = 8;
  int determinants = 1;
  double range_min = 0.5;
  double range_max = 10.0;
};

struct NetworkConfig {
  GlobeConfig globe;
  MoonConfig moon;

  /// Small networks that train in minutes on one core.
  static NetworkConfig desk();
  /// Full-size networks (embedding 128, message 64, 3 layers, hidden 256,
  /// 4 updates, 16 determinants).
  static NetworkConfig full();
  static NetworkConfig preset(const std::string& name);
};

nlohmann::json to_json(const NetworkConfig& config);
NetworkConfig network_from_json(const nlohmann::json& doc);

}  // namespace moonlet::wf
