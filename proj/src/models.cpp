#include "amt/models.hpp"

#include "amt/error.hpp"
#include "amt/json_io.hpp"

namespace amt {
namespace {

using nlohmann::json;

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd rows_matrix(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || Eigen::Index(j.size()) != rows) {
    throw Error(ErrorCode::MalformedFile, "matrix has the wrong number of rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(size_t(r));
    if (!row.is_array() || Eigen::Index(row.size()) != cols) {
      throw Error(ErrorCode::MalformedFile, "matrix has the wrong number of columns");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(size_t(c)).get<double>();
  }
  return m;
}

json counts_to_json(const TransitionModel& model) {
  json out = json::array();
  for (const auto& [context, successors] : model.counts) {
    json next = json::array();
    for (const auto& [state, count] : successors) next.push_back({state, count});
    out.push_back({{"context", context}, {"successors", next}});
  }
  return out;
}

void counts_from_json(const json& j, TransitionModel& model) {
  for (const auto& entry : j) {
    auto context = entry.at("context").get<std::vector<int>>();
    if (int(context.size()) != model.order) {
      throw Error(ErrorCode::MalformedFile, "transition context length does not match order");
    }
    for (const auto& pair : entry.at("successors")) {
      const int state = pair.at(0).get<int>();
      if (state < 0 || state >= model.n_states()) {
        throw Error(ErrorCode::MalformedFile, "transition refers to an unknown state");
      }
      model.counts[context][state] = pair.at(1).get<int64_t>();
    }
  }
}

template <typename F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, what + ": " + e.what());
  }
}

}  // namespace

json on_off_to_json(const OnOffModels& models) {
  json per = json::array();
  for (size_t k = 0; k < models.pitches.size(); ++k) {
    const auto& m = models.models[k];
    per.push_back({{"pitch", models.pitches[k]},
                   {"prior_on", m.prior_on},
                   {"transition", matrix_rows(m.transition)},
                   {"counts", matrix_rows(m.counts)}});
  }
  return {{"type", "onoff"}, {"states", {"off", "on"}}, {"pitches", per}};
}

OnOffModels on_off_from_json(const json& j) {
  return guarded("on/off model", [&] {
    OnOffModels out;
    for (const auto& p : j.at("pitches")) {
      out.pitches.push_back(p.at("pitch").get<int>());
      OnOffHmm m;
      m.prior_on = p.at("prior_on").get<double>();
      m.transition = rows_matrix(p.at("transition"), 2, 2);
      if (p.contains("counts")) m.counts = rows_matrix(p.at("counts"), 2, 2);
      out.models.push_back(m);
    }
    return out;
  });
}

json duration_to_json(const DurationModels& models) {
  json per = json::array();
  for (size_t k = 0; k < models.pitches.size(); ++k) {
    const auto& m = models.models[k];
    json survival = json::array();
    for (int i = 0; i < 2; ++i) {
      json row = json::array();
      for (Eigen::Index d = 0; d < m.survival.cols(); ++d) row.push_back(m.survival(i, d));
      survival.push_back(row);
    }
    per.push_back({{"pitch", models.pitches[k]},
                   {"stay", matrix_rows(m.stay)},
                   {"survival", survival},
                   {"beyond", {m.beyond(0), m.beyond(1)}}});
  }
  const int order = models.models.empty() ? 1 : models.models.front().max_order;
  return {{"type", "duration"}, {"max_order", order}, {"states", {"off", "on"}}, {"pitches", per}};
}

DurationModels duration_from_json(const json& j) {
  return guarded("duration model", [&] {
    DurationModels out;
    const int order = j.at("max_order").get<int>();
    if (order < 1) throw Error(ErrorCode::MalformedFile, "duration order must be >= 1");
    for (const auto& p : j.at("pitches")) {
      out.pitches.push_back(p.at("pitch").get<int>());
      DurationHmm m;
      m.max_order = order;
      m.stay = rows_matrix(p.at("stay"), 2, order);
      m.survival.setZero(2, order);
      if (p.contains("survival")) {
        const auto& s = p.at("survival");
        for (int i = 0; i < 2; ++i) {
          for (int d = 0; d < order; ++d) m.survival(i, d) = s.at(size_t(i)).at(size_t(d)).get<int64_t>();
        }
        m.beyond << p.at("beyond").at(0).get<int64_t>(), p.at("beyond").at(1).get<int64_t>();
      }
      out.models.push_back(m);
    }
    return out;
  });
}

json transition_to_json(const TransitionModel& model) {
  return {{"type", "transition"},
          {"order", model.order},
          {"states", model.states},
          {"counts", counts_to_json(model)},
          {"provenance", model.provenance}};
}

TransitionModel transition_from_json(const json& j) {
  return guarded("transition model", [&] {
    TransitionModel m = make_transition_model(j.at("order").get<int>());
    m.states = j.at("states").get<std::vector<PitchSet>>();
    if (m.states.empty() || !m.states.front().empty()) {
      throw Error(ErrorCode::MalformedFile, "state 0 must be silence");
    }
    counts_from_json(j.at("counts"), m);
    m.provenance = j.value("provenance", std::vector<std::string>{});
    return m;
  });
}

json keyed_to_json(const KeyConditionedModel& model) {
  json keys = json::array();
  for (int k = 0; k < 24; ++k) {
    keys.push_back({{"key", Key::from_index(k).label()},
                    {"counts", counts_to_json(model.models[size_t(k)])}});
  }
  return {{"type", "key-conditioned"},
          {"order", 1},
          {"states", model.models[0].states},
          {"keys", keys},
          {"provenance", model.models[0].provenance}};
}

KeyConditionedModel keyed_from_json(const json& j) {
  return guarded("key-conditioned model", [&] {
    KeyConditionedModel out;
    const auto states = j.at("states").get<std::vector<PitchSet>>();
    const auto& keys = j.at("keys");
    if (keys.size() != 24) throw Error(ErrorCode::MalformedFile, "expected 24 key models");
    const auto provenance = j.value("provenance", std::vector<std::string>{});
    for (size_t k = 0; k < 24; ++k) {
      auto& m = out.models[k];
      m = make_transition_model(1);
      m.states = states;
      m.provenance = provenance;
      counts_from_json(keys.at(k).at("counts"), m);
    }
    return out;
  });
}

void save_models(const ModelSet& models, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
  auto stamp = [&](json doc) {
    doc["provenance"] = models.provenance;
    return doc;
  };
  if (models.on_off) write_json(stamp(on_off_to_json(*models.on_off)), dir / "onoff.json");
  if (models.duration) write_json(stamp(duration_to_json(*models.duration)), dir / "duration.json");
  if (models.order1) write_json(stamp(transition_to_json(*models.order1)), dir / "order1.json");
  if (models.order2) write_json(stamp(transition_to_json(*models.order2)), dir / "order2.json");
  if (models.keyed) {
    auto doc = stamp(keyed_to_json(*models.keyed));
    doc["training_keys"] = models.keys;
    write_json(doc, dir / "key.json");
  }
}

ModelSet load_models(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::UnreadableFile, "model directory not found: " + dir.string());
  }
  ModelSet out;
  auto load = [&](const char* name) -> std::optional<json> {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) return std::nullopt;
    auto doc = read_json(path);
    if (out.provenance.empty()) out.provenance = doc.value("provenance", std::vector<std::string>{});
    return doc;
  };
  if (auto j = load("onoff.json")) out.on_off = on_off_from_json(*j);
  if (auto j = load("duration.json")) out.duration = duration_from_json(*j);
  if (auto j = load("order1.json")) out.order1 = transition_from_json(*j);
  if (auto j = load("order2.json")) out.order2 = transition_from_json(*j);
  if (auto j = load("key.json")) {
    out.keyed = keyed_from_json(*j);
    out.keys = j->value("training_keys", std::vector<std::string>{});
  }
  return out;
}

}  // namespace amt
