#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bsdr/errors.hpp"
#include "bsdr/io.hpp"

namespace bsdr::io {

namespace {

Trajectory parse_record(const nlohmann::json& j) {
    if (!j.is_object()) throw DomainError("record is not a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "agent_id" && key != "states" && key != "actions") {
            throw DomainError("unknown field '" + key + "'");
        }
    }
    Trajectory xi;
    const auto agent = j.find("agent_id");
    if (agent == j.end() || !agent->is_string()) throw DomainError("field 'agent_id' must be a string");
    xi.agent_id = agent->get<std::string>();

    const auto states = j.find("states");
    if (states == j.end() || !states->is_array()) throw DomainError("field 'states' must be an array");
    for (std::size_t t = 0; t < states->size(); ++t) {
        const auto& s = (*states)[t];
        if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer()) {
            throw DomainError("step " + std::to_string(t) + ": state must be an [x, y] integer pair");
        }
        xi.states.push_back({s[0].get<int>(), s[1].get<int>()});
    }
    if (const auto actions = j.find("actions"); actions != j.end()) {
        if (!actions->is_array()) throw DomainError("field 'actions' must be an array");
        for (std::size_t t = 0; t < actions->size(); ++t) {
            const auto& a = (*actions)[t];
            if (!a.is_number_integer()) throw DomainError("step " + std::to_string(t) + ": action must be an integer");
            xi.actions.push_back(a.get<int>());
        }
    }
    return xi;
}

}  // namespace

std::string trajectory_to_json_line(const Trajectory& xi) {
    nlohmann::json j;
    j["agent_id"] = xi.agent_id.value_or("");
    auto states = nlohmann::json::array();
    for (Cell c : xi.states) states.push_back({c.x, c.y});
    j["states"] = std::move(states);
    if (!xi.actions.empty()) j["actions"] = xi.actions;
    return j.dump();
}

std::string dataset_to_jsonl(const Dataset& data) {
    std::string out;
    for (const auto& [id, trajs] : data.by_agent) {
        for (Trajectory xi : trajs) {
            xi.agent_id = id;
            out += trajectory_to_json_line(xi);
            out += '\n';
        }
    }
    return out;
}

Dataset dataset_from_jsonl(const std::string& text, const GridSpec& spec, const std::string& source,
                           std::vector<std::string>* warnings) {
    Dataset data(spec);
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DomainError(where + "malformed JSON (" + e.what() + ")");
        }
        try {
            Trajectory xi = parse_record(j);
            const std::string agent = *xi.agent_id;
            data.add(agent, std::move(xi));
        } catch (const DomainError& e) {
            throw DomainError(where + e.what());
        }
    }
    if (data.empty() && warnings) warnings->push_back(source + ": no trajectories; the dataset is empty");
    return data;
}

Dataset load_dataset(const std::filesystem::path& path, const GridSpec& spec, std::vector<std::string>* warnings) {
    return dataset_from_jsonl(read_file(path), spec, path.string(), warnings);
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) { write_file(path, dataset_to_jsonl(data)); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("error while writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

}  // namespace bsdr::io
