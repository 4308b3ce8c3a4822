#include "pdfa/model_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pdfa {

using nlohmann::json;

std::string model_to_json(const PdfaView& model, int indent) {
  json states = json::array();
  for (std::size_t q = 0; q < model.states.size(); ++q) {
    const auto& s = model.states[q];
    json transitions = json::array();
    for (const auto& t : s.transitions) {
      transitions.push_back({{"symbol", t.symbol}, {"target", t.target ? json(*t.target) : json(nullptr)}, {"prob", t.prob}});
    }
    states.push_back({{"id", q}, {"final_prob", s.final_prob}, {"transitions", std::move(transitions)}});
  }
  json doc = {{"schema", kModelSchema}, {"alphabet_size", model.alphabet.size}, {"root", model.root},
              {"states", std::move(states)}};
  return doc.dump(indent) + "\n";
}

PdfaView model_from_json(const std::string& text) {
  PdfaView model;
  try {
    const json doc = json::parse(text);
    if (doc.at("schema").get<std::string>() != kModelSchema) {
      throw std::runtime_error("unsupported model schema '" + doc.at("schema").get<std::string>() + "'");
    }
    model.alphabet.size = doc.at("alphabet_size").get<std::size_t>();
    model.root = doc.at("root").get<StateId>();
    const auto& states = doc.at("states");
    model.states.resize(states.size());
    for (const auto& s : states) {
      const auto id = s.at("id").get<std::size_t>();
      if (id >= model.states.size()) throw std::runtime_error("state id " + std::to_string(id) + " out of range");
      auto& state = model.states[id];
      state.final_prob = s.at("final_prob").get<double>();
      for (const auto& t : s.at("transitions")) {
        PdfaTransition tr;
        tr.symbol = t.at("symbol").get<Symbol>();
        if (!t.at("target").is_null()) tr.target = t.at("target").get<StateId>();
        tr.prob = t.at("prob").get<double>();
        state.transitions.push_back(tr);
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed model JSON: ") + e.what());
  }
  model.validate();
  return model;
}

std::string model_to_dot(const PdfaView& model) {
  std::ostringstream out;
  out.precision(4);
  out << "digraph pdfa {\n  rankdir=LR;\n  node [shape=circle];\n";
  for (std::size_t q = 0; q < model.states.size(); ++q) {
    out << "  s" << q << " [label=\"" << q << "\\n" << model.states[q].final_prob << "\"";
    if (q == model.root) out << ", shape=doublecircle";
    out << "];\n";
  }
  bool dangling = false;
  for (std::size_t q = 0; q < model.states.size(); ++q) {
    for (const auto& t : model.states[q].transitions) {
      out << "  s" << q << " -> " << (t.target ? "s" + std::to_string(*t.target) : std::string("sink"))
          << " [label=\"" << t.symbol << " : " << t.prob << "\"];\n";
      dangling = dangling || !t.target;
    }
  }
  if (dangling) out << "  sink [shape=point];\n";
  out << "}\n";
  return out.str();
}

void save_model(const std::filesystem::path& path, const PdfaView& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << model_to_json(model);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

PdfaView load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace pdfa
