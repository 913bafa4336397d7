#include "flowbench/schema.hpp"

#include "flowbench/common.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <set>

namespace flowbench {

void DatasetSchema::validate() const {
  if (label_column.empty()) throw Error(fmt::format("schema '{}': empty label_column", name));
  std::set<std::string> seen;
  auto claim = [&](const std::vector<std::string>& columns, std::string_view role) {
    for (const auto& c : columns) {
      if (!seen.insert(c).second) {
        throw Error(fmt::format("schema '{}': column '{}' declared twice ({})", name, c, role));
      }
    }
  };
  claim(identifier_columns, "identifier");
  claim(categorical_columns, "categorical");
  claim(boolean_columns, "boolean");
  if (seen.count(label_column) != 0) {
    throw Error(fmt::format("schema '{}': label column '{}' also has another role", name, label_column));
  }
}

bool DatasetSchema::is_attack(std::string_view label_cell) const {
  if (negative_token) return label_cell != *negative_token;
  return label_cell == positive_token;
}

std::vector<std::string> builtin_schema_names() {
  return {"unsw-nb15", "ton-iot", "cse-cic-ids2018", "synthetic"};
}

DatasetSchema builtin_schema(std::string_view name) {
  DatasetSchema s;
  s.name = std::string(name);
  if (name == "unsw-nb15") {
    s.identifier_columns = {"id", "srcip", "dstip", "sport", "dport", "stime", "ltime"};
    s.categorical_columns = {"proto", "service", "state"};
    s.label_column = "label";
    s.attack_type_column = "attack_cat";
  } else if (name == "ton-iot") {
    s.identifier_columns = {"ts", "src_ip", "dst_ip", "src_port", "dst_port"};
    s.categorical_columns = {"proto",        "service",          "conn_state",
                             "ssl_version",  "ssl_cipher",       "ssl_subject",
                             "ssl_issuer",   "dns_query",        "http_method",
                             "http_version", "http_resp_mime_types",
                             "http_orig_mime_types", "http_uri", "http_user_agent",
                             "weird_addl",   "weird_name"};
    s.boolean_columns = {"dns_AA",      "dns_RD",          "dns_RA",      "dns_rejected",
                         "ssl_resumed", "ssl_established", "weird_notice"};
    s.label_column = "label";
    s.attack_type_column = "type";
  } else if (name == "cse-cic-ids2018") {
    s.identifier_columns = {"Dst IP", "Flow ID", "Src IP", "Src Port", "Dst Port", "Timestamp"};
    s.label_column = "Label";
    s.attack_type_column = "Label";
    s.negative_token = "Benign";
  } else if (name == "synthetic") {
    s.identifier_columns = {"id", "srcip", "dstip", "sport", "dport"};
    s.categorical_columns = {"cat_0", "cat_1"};
    s.boolean_columns = {"bool_0", "bool_1"};
    s.label_column = "label";
    s.attack_type_column = "attack_cat";
  } else {
    throw Error(fmt::format("unknown built-in schema '{}'", name));
  }
  s.validate();
  return s;
}

namespace {

std::vector<std::string> read_list(const YAML::Node& node, const char* key) {
  std::vector<std::string> out;
  if (const auto list = node[key]) {
    if (!list.IsSequence()) throw Error(fmt::format("schema key '{}' must be a list", key));
    for (const auto& item : list) out.push_back(item.as<std::string>());
  }
  return out;
}

}  // namespace

DatasetSchema load_schema(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw Error(fmt::format("cannot read schema '{}': {}", path, e.what()));
  }
  DatasetSchema s;
  s.name = root["name"] ? root["name"].as<std::string>() : std::filesystem::path(path).stem().string();
  s.identifier_columns = read_list(root, "identifier_columns");
  s.categorical_columns = read_list(root, "categorical_columns");
  s.boolean_columns = read_list(root, "boolean_columns");
  if (root["label_column"]) s.label_column = root["label_column"].as<std::string>();
  if (root["attack_type_column"]) s.attack_type_column = root["attack_type_column"].as<std::string>();
  if (root["positive_token"]) s.positive_token = root["positive_token"].as<std::string>();
  if (root["negative_token"]) s.negative_token = root["negative_token"].as<std::string>();
  s.validate();
  return s;
}

void save_schema(const DatasetSchema& schema, const std::string& path) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << schema.name;
  out << YAML::Key << "identifier_columns" << YAML::Value << YAML::Flow << schema.identifier_columns;
  out << YAML::Key << "categorical_columns" << YAML::Value << YAML::Flow << schema.categorical_columns;
  out << YAML::Key << "boolean_columns" << YAML::Value << YAML::Flow << schema.boolean_columns;
  out << YAML::Key << "label_column" << YAML::Value << schema.label_column;
  if (schema.attack_type_column) {
    out << YAML::Key << "attack_type_column" << YAML::Value << *schema.attack_type_column;
  }
  out << YAML::Key << "positive_token" << YAML::Value << schema.positive_token;
  if (schema.negative_token) out << YAML::Key << "negative_token" << YAML::Value << *schema.negative_token;
  out << YAML::EndMap;
  std::ofstream file(path);
  if (!file) throw Error(fmt::format("cannot write schema '{}'", path));
  file << out.c_str() << '\n';
}

DatasetSchema resolve_schema(const std::string& name_or_path) {
  for (const auto& n : builtin_schema_names()) {
    if (n == name_or_path) return builtin_schema(n);
  }
  if (!std::filesystem::exists(name_or_path)) {
    throw Error(fmt::format("'{}' is neither a built-in schema nor a schema file", name_or_path));
  }
  return load_schema(name_or_path);
}

}  // namespace flowbench
