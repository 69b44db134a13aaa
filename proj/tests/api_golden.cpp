#include "api_golden.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace adaptpara::testing {

std::string RenderExchange(const HttpRequest& request, const HttpResponse& response) {
  std::ostringstream out;
  out << request.method << ' ' << request.path << '\n';
  for (const auto& [name, value] : request.headers) out << name << ": " << value << '\n';
  out << request.body << "\n\n";
  out << "HTTP " << response.status << '\n';
  for (const auto& [name, value] : response.headers) out << name << ": " << value << '\n';
  out << '\n' << response.body << '\n';
  return out.str();
}

std::vector<GoldenOutcome> RunApiGoldens(const std::string& config_path,
                                         const std::string& golden_dir, bool update) {
  const Config config = Config::FromFile(config_path, Config::NoEnv);
  Backend backend(config);

  std::ifstream script(golden_dir + "/script.jsonl");
  if (!script) throw std::runtime_error("missing " + golden_dir + "/script.jsonl");
  std::vector<GoldenOutcome> outcomes;
  for (std::string line; std::getline(script, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto step = nlohmann::ordered_json::parse(line);
    if (step.value("before", "") == "close_stores") backend.CloseStores();

    HttpRequest request;
    request.method = step.at("method");
    request.path = step.at("path");
    if (step.contains("headers")) {
      for (const auto& [k, v] : step["headers"].items()) request.headers[k] = v;
    }
    if (step.contains("raw_body")) {
      request.body = step["raw_body"];
    } else if (step.contains("body")) {
      request.body = step["body"].dump();
    }
    // "text_repeat": n replaces body.text with n letters (oversized input)
    if (step.contains("text_repeat")) {
      auto body = step["body"];
      body["text"] = std::string(step["text_repeat"].get<std::size_t>(), 'a');
      request.body = body.dump();
    }

    GoldenOutcome outcome;
    outcome.name = step.at("name");
    outcome.actual = RenderExchange(request, backend.service().Handle(request));
    const std::string path = golden_dir + "/" + outcome.name + ".golden";
    std::ifstream in(path, std::ios::binary);
    const std::string expected(std::istreambuf_iterator<char>(in), {});
    outcome.matched = in.is_open() && expected == outcome.actual;
    if (update && !outcome.matched) {
      std::ofstream(path, std::ios::binary | std::ios::trunc) << outcome.actual;
    }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

}  // namespace adaptpara::testing
