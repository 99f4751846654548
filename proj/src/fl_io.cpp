#include "fairclust/errors.hpp"
#include "fairclust/matroid_fl.hpp"

#include <json.hpp>

#include <istream>
#include <iterator>
#include <ostream>
#include <string>

namespace fairclust {

namespace {

using nlohmann::json;

std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(std::string("missing field \"") + key + "\"");
  return obj.at(key);
}

}  // namespace

FLInstance read_fl_instance(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_of(text, e.byte));
  }
  try {
    const double p = doc.value("p", 1.0);
    std::vector<Facility> facilities;
    std::vector<Client> clients;
    std::vector<Eigen::VectorXd> coords;
    bool all_coords = true;
    auto take_coords = [&](const json& node) {
      if (!node.contains("coords")) {
        all_coords = false;
        return;
      }
      const auto v = node.at("coords").get<std::vector<double>>();
      coords.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    for (const auto& f : field(doc, "facilities")) {
      facilities.push_back({field(f, "id").get<int>(), f.value("cost", 0.0)});
      take_coords(f);
    }
    for (const auto& c : field(doc, "clients")) {
      clients.push_back({field(c, "id").get<int>(), c.value("demand", 1.0)});
      take_coords(c);
    }
    const std::size_t n = facilities.size() + clients.size();
    Eigen::MatrixXd d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    if (doc.contains("distances")) {
      const auto rows = doc.at("distances").get<std::vector<std::vector<double>>>();
      if (rows.size() != n) throw ParseError("distance matrix must have one row per node");
      for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) throw ParseError("distance matrix must be square");
        for (std::size_t j = 0; j < n; ++j)
          d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    } else if (all_coords && n > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        if (coords[i].size() != coords[0].size()) throw ParseError("coordinates differ in dimension");
        for (std::size_t j = 0; j < n; ++j)
          d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (coords[i] - coords[j]).norm();
      }
    } else if (n > 0) {
      throw ParseError("need either \"distances\" or coords on every facility and client");
    }
    const auto& mj = field(doc, "matroid");
    auto parts = field(mj, "parts").get<std::vector<std::vector<int>>>();
    auto caps = field(mj, "caps").get<std::vector<int>>();
    std::vector<int> ground;
    for (const auto& f : facilities) ground.push_back(f.id);
    return FLInstance(std::move(facilities), std::move(clients), std::move(d), p,
                      PartitionMatroid(std::move(ground), std::move(parts), std::move(caps)));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad instance field: ") + e.what());
  }
}

void write_fl_instance(std::ostream& out, const FLInstance& inst) {
  json doc;
  doc["p"] = inst.p();
  for (const auto& f : inst.facilities()) doc["facilities"].push_back({{"id", f.id}, {"cost", f.cost}});
  for (const auto& c : inst.clients()) doc["clients"].push_back({{"id", c.id}, {"demand", c.demand}});
  doc["matroid"] = {{"parts", inst.matroid().parts()}, {"caps", inst.matroid().caps()}};
  const auto& d = inst.node_distances();
  json rows = json::array();
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < d.cols(); ++j) row.push_back(d(i, j));
    rows.push_back(std::move(row));
  }
  doc["distances"] = std::move(rows);
  out << doc.dump(2) << '\n';
}

}  // namespace fairclust
