#include "boxtrack/scenario_io.hpp"

#include "boxtrack/errors.hpp"

namespace boxtrack {

json operation_to_json(const Operation& op) {
  json j;
  j["kind"] = std::string(to_string(op.kind()));
  j["objs"] = op.objects();
  if (op.src()) j["src"] = *op.src();
  if (op.dst()) j["dst"] = *op.dst();
  return j;
}

Operation operation_from_json(const json& j) {
  try {
    auto kind = op_kind_from_string(j.at("kind").get<std::string>());
    auto objs = j.at("objs").get<std::vector<std::string>>();
    switch (kind) {
      case OpKind::Put:
        return Operation::put(std::move(objs), j.at("dst").get<int>());
      case OpKind::Remove:
        return Operation::remove(std::move(objs), j.at("src").get<int>());
      case OpKind::Move:
        return Operation::move(std::move(objs), j.at("src").get<int>(), j.at("dst").get<int>());
    }
  } catch (const json::exception& err) {
    throw InvalidArgument(std::string("malformed operation record: ") + err.what());
  }
  throw InvalidArgument("malformed operation record");
}

json scenario_to_json(const Scenario& sc) {
  json ops = json::array();
  for (const auto& op : sc.ops) ops.push_back(operation_to_json(op));
  return json{{"id", sc.id}, {"initial", sc.initial.boxes()}, {"ops", std::move(ops)}, {"signature", sc.signature}};
}

Scenario scenario_from_json(const json& j, const WorldConfig& cfg) {
  std::string id;
  std::vector<BoxContents> boxes;
  std::vector<Operation> ops;
  try {
    id = j.at("id").get<std::string>();
    boxes = j.at("initial").get<std::vector<BoxContents>>();
    for (const auto& op : j.at("ops")) ops.push_back(operation_from_json(op));
  } catch (const json::exception& err) {
    throw InvalidArgument(std::string("malformed scenario record: ") + err.what());
  }
  Scenario sc = Scenario::build(id, WorldState(std::move(boxes)), std::move(ops), cfg);
  if (j.contains("signature") && j["signature"].get<std::string>() != sc.signature) {
    throw InvalidArgument("scenario '" + id + "' stored signature " + j["signature"].get<std::string>() +
                          " does not match computed " + sc.signature);
  }
  return sc;
}

std::vector<Scenario> read_scenarios(const std::filesystem::path& path, const WorldConfig& cfg) {
  std::vector<Scenario> out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    try {
      out.push_back(scenario_from_json(j, cfg));
    } catch (const Error& err) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line) + ": " + err.what());
    }
  });
  return out;
}

void write_scenarios(const std::filesystem::path& path, const std::vector<Scenario>& scenarios) {
  JsonlWriter w(path);
  for (const auto& sc : scenarios) w.write(scenario_to_json(sc));
  w.flush();
}

json world_config_to_json(const WorldConfig& cfg, bool include_objects) {
  json j{{"n", cfg.n},
         {"m", cfg.m},
         {"e", cfg.e},
         {"num_ops", cfg.num_ops},
         {"arity", {{"put_max", cfg.arity.put_max}, {"move_max", cfg.arity.move_max},
                    {"remove_max", cfg.arity.remove_max}}},
         {"num_objects", cfg.objects.size()}};
  if (include_objects) j["objects"] = cfg.objects;
  return j;
}

}  // namespace boxtrack
