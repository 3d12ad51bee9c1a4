#include <fstream>
#include <json.hpp>
#include <sstream>

#include "dtlearn/core.hpp"

namespace dtl {

using nlohmann::json;

namespace {

json node_to_json(const DecisionTree& t, int idx) {
  const auto& nd = t.node(idx);
  if (nd.var == 0) return json{{"leaf", nd.lo}};
  return json{{"var", nd.var},
              {"lo", node_to_json(t, nd.lo)},
              {"hi", node_to_json(t, nd.hi)}};
}

DecisionTree node_from_json(int n, const json& j) {
  if (!j.is_object()) throw FormatError("tree node must be an object");
  if (j.contains("leaf")) {
    int v = j.at("leaf").get<int>();
    if (v != 0 && v != 1) throw FormatError("leaf value must be 0 or 1");
    return DecisionTree::leaf(n, v == 1);
  }
  if (!j.contains("var") || !j.contains("lo") || !j.contains("hi")) {
    throw FormatError("internal node needs var, lo and hi");
  }
  int var = j.at("var").get<int>();
  if (var < 1 || var > n) throw FormatError("node variable out of range");
  return DecisionTree::internal(var, node_from_json(n, j.at("lo")),
                                node_from_json(n, j.at("hi")));
}

}  // namespace

std::string tree_to_json(const DecisionTree& tree, int indent) {
  json doc{{"n", tree.n()}, {"root", node_to_json(tree, tree.root())}};
  return doc.dump(indent);
}

DecisionTree tree_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("tree json: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("n") || !doc.contains("root")) {
    throw FormatError("tree document needs n and root");
  }
  int n = doc.at("n").get<int>();
  if (n < 0) throw FormatError("tree arity must be non-negative");
  return node_from_json(n, doc.at("root"));
}

DecisionTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open tree file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return tree_from_json(ss.str());
}

void save_tree(const DecisionTree& tree, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write tree file " + path);
  out << tree_to_json(tree, 2) << '\n';
}

}  // namespace dtl
