#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "cityexpo/errors.h"
#include "cityexpo/social_graph.h"

namespace cityexpo {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string id_from_json(const json& v, std::size_t line, const char* field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(std::string("field '") + field + "' must be a string or integer id",
                   line);
}

Token token_from_json(const json& v, std::size_t line) {
  if (v.is_null()) return std::nullopt;
  if (v.is_string()) return v.get<std::string>();
  throw ParseError("attribute values must be strings or null", line);
}

double coord_from_json(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_number()) {
    throw ParseError(std::string("location needs numeric '") + field + "'", line);
  }
  return it->get<double>();
}

// RFC 4180 style fields. An unquoted empty field is NULL; a quoted empty
// field is the empty-string token.
struct CsvField {
  std::string text;
  bool quoted = false;
};

std::vector<CsvField> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<CsvField> fields;
  CsvField cur;
  bool in_quotes = false;
  bool after_quote = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.text.push_back('"');
          ++i;
        } else {
          in_quotes = false;
          after_quote = true;
        }
      } else {
        cur.text.push_back(c);
      }
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur = {};
      after_quote = false;
    } else if (c == '"' && cur.text.empty() && !cur.quoted) {
      in_quotes = true;
      cur.quoted = true;
    } else if (after_quote) {
      throw ParseError("unexpected character after closing quote", line_no);
    } else {
      cur.text.push_back(c);
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", line_no);
  fields.push_back(std::move(cur));
  return fields;
}

std::string quote_csv(const std::string& s) {
  bool needs = s.empty() || s.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_token(const Token& t) { return t ? quote_csv(*t) : std::string(); }

Token token_from_csv(const CsvField& f) {
  if (f.text.empty() && !f.quoted) return std::nullopt;
  return f.text;
}

template <typename Fn>
void for_each_csv_row(std::istream& in, std::size_t expected_columns,
                      std::vector<std::string>* header_out, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line, line_no);
    if (header) {
      header = false;
      if (fields.size() < expected_columns) {
        throw ParseError("header has too few columns", line_no);
      }
      if (header_out) {
        for (auto& f : fields) header_out->push_back(f.text);
      }
      expected_columns = fields.size();
      continue;
    }
    if (fields.size() != expected_columns) {
      throw ParseError("expected " + std::to_string(expected_columns) +
                           " columns, found " + std::to_string(fields.size()),
                       line_no);
    }
    fn(fields, line_no);
  }
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + s + "'", line_no);
  }
}

std::vector<std::string> kinds_with_extras(const std::set<std::string>& seen) {
  std::vector<std::string> kinds = default_kinds();
  for (const auto& k : seen) {
    if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
  }
  return kinds;
}

}  // namespace

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "jsonl") return DatasetFormat::kJsonl;
  if (name == "csv" || name == "csv-bundle") return DatasetFormat::kCsvBundle;
  throw ConfigError("unknown dataset format '" + std::string(name) + "'");
}

SocialDataset read_jsonl(std::istream& in) {
  std::vector<Location> locations;
  std::vector<UserRecord> users;
  std::set<std::string> seen_kinds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object() || !obj.contains("type") || !obj["type"].is_string()) {
      throw ParseError("record needs a string 'type' field", line_no);
    }
    const std::string type = obj["type"].get<std::string>();
    if (!obj.contains("id")) throw ParseError("record needs an 'id'", line_no);
    if (type == "location") {
      locations.push_back({id_from_json(obj["id"], line_no, "id"),
                           coord_from_json(obj, "lat", line_no),
                           coord_from_json(obj, "lon", line_no)});
    } else if (type == "user") {
      UserRecord rec;
      rec.id = id_from_json(obj["id"], line_no, "id");
      if (auto it = obj.find("current_city"); it != obj.end() && !it->is_null()) {
        rec.current_city = id_from_json(*it, line_no, "current_city");
      }
      if (auto it = obj.find("attrs"); it != obj.end() && !it->is_null()) {
        if (!it->is_object()) throw ParseError("'attrs' must be an object", line_no);
        for (auto& [kind, value] : it->items()) {
          rec.attrs[kind] = token_from_json(value, line_no);
          seen_kinds.insert(kind);
        }
      }
      if (auto it = obj.find("friends"); it != obj.end() && !it->is_null()) {
        if (!it->is_array()) throw ParseError("'friends' must be an array", line_no);
        for (const auto& f : *it) rec.friends.push_back(id_from_json(f, line_no, "friends"));
      }
      users.push_back(std::move(rec));
    } else {
      throw ParseError("unknown record type '" + type + "'", line_no);
    }
  }
  return SocialDataset::from_records(std::move(locations), std::move(users),
                                     kinds_with_extras(seen_kinds));
}

void write_jsonl(const SocialDataset& ds, std::ostream& out) {
  for (const auto& loc : ds.locations()) {
    ordered_json j;
    j["type"] = "location";
    j["id"] = loc.id;
    j["lat"] = loc.lat;
    j["lon"] = loc.lon;
    out << j.dump() << '\n';
  }
  for (const auto& u : ds.users()) {
    ordered_json j;
    j["type"] = "user";
    j["id"] = u.id;
    j["current_city"] =
        u.current_city ? ordered_json(ds.location(*u.current_city).id) : ordered_json();
    ordered_json attrs = ordered_json::object();
    for (std::size_t k = 0; k < ds.num_kinds(); ++k) {
      attrs[ds.kinds()[k]] = u.attrs[k] ? ordered_json(*u.attrs[k]) : ordered_json();
    }
    j["attrs"] = std::move(attrs);
    ordered_json friends = ordered_json::array();
    for (UserIndex f : u.friends) friends.push_back(ds.user(f).id);
    j["friends"] = std::move(friends);
    out << j.dump() << '\n';
  }
}

SocialDataset read_csv_bundle(std::istream& locations_in, std::istream& users_in,
                              std::istream& edges_in) {
  std::vector<Location> locations;
  for_each_csv_row(locations_in, 3, nullptr,
                   [&](const std::vector<CsvField>& f, std::size_t line_no) {
                     locations.push_back({f[0].text, parse_double(f[1].text, line_no),
                                          parse_double(f[2].text, line_no)});
                   });

  std::vector<std::string> header;
  std::vector<UserRecord> users;
  for_each_csv_row(users_in, 2, &header,
                   [&](const std::vector<CsvField>& f, std::size_t) {
                     UserRecord rec;
                     rec.id = f[0].text;
                     if (!f[1].text.empty()) rec.current_city = f[1].text;
                     for (std::size_t c = 2; c < f.size(); ++c) {
                       rec.attrs[header[c]] = token_from_csv(f[c]);
                     }
                     users.push_back(std::move(rec));
                   });
  std::set<std::string> seen(header.size() > 2 ? header.begin() + 2 : header.end(),
                             header.end());

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < users.size(); ++i) index.emplace(users[i].id, i);
  for_each_csv_row(edges_in, 2, nullptr,
                   [&](const std::vector<CsvField>& f, std::size_t line_no) {
                     auto it = index.find(f[0].text);
                     if (it == index.end()) {
                       throw ValidationError("edge at line " + std::to_string(line_no) +
                                             " references unknown user '" + f[0].text +
                                             "'");
                     }
                     users[it->second].friends.push_back(f[1].text);
                   });
  return SocialDataset::from_records(std::move(locations), std::move(users),
                                     kinds_with_extras(seen));
}

void write_csv_bundle(const SocialDataset& ds, std::ostream& locations_out,
                      std::ostream& users_out, std::ostream& edges_out) {
  auto fmt = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  locations_out << "id,lat,lon\n";
  for (const auto& loc : ds.locations()) {
    locations_out << quote_csv(loc.id) << ',' << fmt(loc.lat) << ',' << fmt(loc.lon)
                  << '\n';
  }
  users_out << "id,current_city";
  for (const auto& k : ds.kinds()) users_out << ',' << quote_csv(k);
  users_out << '\n';
  edges_out << "src,dst\n";
  for (UserIndex u = 0; u < ds.num_users(); ++u) {
    const User& user = ds.user(u);
    users_out << quote_csv(user.id) << ','
              << (user.current_city ? quote_csv(ds.location(*user.current_city).id)
                                    : std::string());
    for (const auto& t : user.attrs) users_out << ',' << csv_token(t);
    users_out << '\n';
    for (UserIndex f : user.friends) {
      if (f > u) edges_out << quote_csv(user.id) << ',' << quote_csv(ds.user(f).id) << '\n';
    }
  }
}

SocialDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  auto open = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open " + p.string());
    return in;
  };
  if (format == DatasetFormat::kJsonl) {
    auto in = open(path);
    return read_jsonl(in);
  }
  auto loc = open(path / "locations.csv");
  auto users = open(path / "users.csv");
  auto edges = open(path / "edges.csv");
  return read_csv_bundle(loc, users, edges);
}

void save_dataset(const SocialDataset& ds, const std::filesystem::path& path,
                  DatasetFormat format) {
  auto create = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write " + p.string());
    return out;
  };
  if (format == DatasetFormat::kJsonl) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto out = create(path);
    write_jsonl(ds, out);
    return;
  }
  std::filesystem::create_directories(path);
  auto loc = create(path / "locations.csv");
  auto users = create(path / "users.csv");
  auto edges = create(path / "edges.csv");
  write_csv_bundle(ds, loc, users, edges);
}

}  // namespace cityexpo
