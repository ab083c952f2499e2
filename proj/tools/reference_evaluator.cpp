// Reference child process for the external-evaluator protocol.
//
//   SPACE <one-line JSON space doc>  ->  READY
//   EVAL <label_1> ... <label_d>     ->  sum of the value indices (default)
//                                        or 0.0 with --mode zero
//   END                              ->  exit 0
//
// Anything unexpected on stdin makes it exit nonzero without replying.

#include <iostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ntbea/text.hpp"

int main(int argc, char** argv) {
    std::string mode = "sum";
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--mode" && i + 1 < argc) mode = argv[++i];
        else {
            std::cerr << "usage: reference_evaluator [--mode sum|zero]\n";
            return 64;
        }
    }
    if (mode != "sum" && mode != "zero") {
        std::cerr << "unknown mode: " << mode << "\n";
        return 64;
    }

    std::vector<std::unordered_map<std::string, int>> label_index;

    std::string line;
    while (std::getline(std::cin, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("SPACE ", 0) == 0) {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(line.substr(6));
            } catch (const nlohmann::json::exception&) {
                return 65;
            }
            if (!doc.contains("dimensions") || !doc["dimensions"].is_array()) return 65;
            label_index.clear();
            for (const auto& dim : doc["dimensions"]) {
                std::unordered_map<std::string, int> m;
                int idx = 0;
                for (const auto& v : dim["values"]) m[v.get<std::string>()] = idx++;
                label_index.push_back(std::move(m));
            }
            std::cout << "READY\n" << std::flush;
        } else if (line.rfind("EVAL ", 0) == 0) {
            auto labels = ntbea::split(line.substr(5), ' ');
            if (labels.size() != label_index.size()) return 66;
            double value = 0.0;
            if (mode == "sum") {
                for (std::size_t i = 0; i < labels.size(); ++i) {
                    auto it = label_index[i].find(labels[i]);
                    if (it == label_index[i].end()) return 66;
                    value += it->second;
                }
            }
            std::cout << ntbea::format_double(value) << "\n" << std::flush;
        } else if (line == "END") {
            return 0;
        } else {
            return 67;
        }
    }
    return 68;  // stdin closed without END
}
