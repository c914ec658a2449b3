#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "lolipop/oracle.hpp"

namespace lolipop {

using json = nlohmann::json;

// Schema: {num_contexts, horizon, num_states, num_actions, start_state,
// context_probs, transitions, rewards}. transitions is [c][h][s][a][s'];
// rewards entries are lists of {value, prob} pairs. nlohmann emits
// shortest-round-trip decimals, so values with <= 17 significant digits
// survive a round trip bit for bit.
inline json model_to_json(const TabularCMDP& m) {
  json doc;
  doc["num_contexts"] = m.num_contexts();
  doc["horizon"] = m.horizon();
  doc["num_states"] = m.num_states();
  doc["num_actions"] = m.num_actions();
  doc["start_state"] = m.start_state();
  doc["context_probs"] = m.context_probs();
  json trans = json::array();
  json rewards = json::array();
  for (int c = 0; c < m.num_contexts(); ++c) {
    json tc = json::array(), rc = json::array();
    for (int h = 0; h < m.horizon(); ++h) {
      json th = json::array(), rh = json::array();
      for (int s = 0; s < m.num_states(); ++s) {
        json ts = json::array(), rs = json::array();
        for (int a = 0; a < m.num_actions(); ++a) {
          auto row = m.transition_row(c, h, s, a);
          ts.push_back(std::vector<double>(row.begin(), row.end()));
          const auto& dist = m.reward(c, h, s, a);
          json pairs = json::array();
          for (std::size_t i = 0; i < dist.values().size(); ++i)
            pairs.push_back({{"value", dist.values()[i]},
                             {"prob", dist.probs()[i]}});
          rs.push_back(std::move(pairs));
        }
        th.push_back(std::move(ts));
        rh.push_back(std::move(rs));
      }
      tc.push_back(std::move(th));
      rc.push_back(std::move(rh));
    }
    trans.push_back(std::move(tc));
    rewards.push_back(std::move(rc));
  }
  doc["transitions"] = std::move(trans);
  doc["rewards"] = std::move(rewards);
  return doc;
}

inline TabularCMDP model_from_json(const json& doc) {
  TabularCMDP m(doc.at("num_contexts").get<int>(),
                doc.at("horizon").get<int>(),
                doc.at("num_states").get<int>(),
                doc.at("num_actions").get<int>(),
                doc.at("start_state").get<int>());
  m.set_context_probs(doc.at("context_probs").get<std::vector<double>>());
  const auto& trans = doc.at("transitions");
  const auto& rewards = doc.at("rewards");
  for (int c = 0; c < m.num_contexts(); ++c)
    for (int h = 0; h < m.horizon(); ++h)
      for (int s = 0; s < m.num_states(); ++s)
        for (int a = 0; a < m.num_actions(); ++a) {
          const auto row = trans.at(c).at(h).at(s).at(a)
                               .get<std::vector<double>>();
          m.set_transition_row(c, h, s, a, row);
          std::vector<double> values, probs;
          for (const auto& pair : rewards.at(c).at(h).at(s).at(a)) {
            values.push_back(pair.at("value").get<double>());
            probs.push_back(pair.at("prob").get<double>());
          }
          m.set_reward(c, h, s, a, DiscreteDistribution(values, probs));
        }
  m.validate();
  return m;
}

inline json model_class_to_json(const ModelClass& mc) {
  json doc;
  json models = json::array();
  for (const auto& m : mc.models) models.push_back(model_to_json(m));
  doc["models"] = std::move(models);
  if (mc.truth_index) doc["truth_index"] = *mc.truth_index;
  return doc;
}

inline ModelClass model_class_from_json(const json& doc) {
  ModelClass mc;
  for (const auto& m : doc.at("models")) mc.models.push_back(model_from_json(m));
  if (doc.contains("truth_index"))
    mc.truth_index = doc.at("truth_index").get<int>();
  mc.validate();
  return mc;
}

inline void save_model_class(const ModelClass& mc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << model_class_to_json(mc).dump(2) << "\n";
}

inline ModelClass load_model_class(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model class file: " + path);
  json doc;
  in >> doc;
  return model_class_from_json(doc);
}

}  // namespace lolipop
