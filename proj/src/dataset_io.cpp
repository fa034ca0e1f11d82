#include "hieropo/dataset_io.hpp"

#include "hieropo/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace hieropo {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what)
{
    throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, sep))
        out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep)
        out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& source, std::size_t line)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            fail(source, line, "not a number: '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        fail(source, line, "not a number: '" + s + "'");
    }
}

int parse_int(const std::string& s, const std::string& source, std::size_t line)
{
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size())
            fail(source, line, "not an integer: '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        fail(source, line, "not an integer: '" + s + "'");
    }
}

void check_header(const LoggedDataset& ds, const std::string& source)
{
    if (ds.m <= 0 || ds.d <= 0 || ds.K <= 0)
        fail(source, 1, "header needs positive m, d, K");
}

} // namespace

void write_dataset_jsonl(const LoggedDataset& dataset, std::ostream& out)
{
    out << json{{"m", dataset.m}, {"d", dataset.d}, {"K", dataset.K}}.dump() << '\n';
    for (const auto& r : dataset.records) {
        json j;
        j["task_id"] = r.task + 1;
        j["action"] = r.action + 1;
        j["features"] = std::vector<double>(r.features.data(), r.features.data() + r.features.size());
        j["reward"] = r.reward;
        out << j.dump() << '\n';
    }
}

LoggedDataset read_dataset_jsonl(std::istream& in, const std::string& source)
{
    LoggedDataset ds;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(source, lineno, std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object())
            fail(source, lineno, "expected a JSON object");
        try {
            if (!have_header) {
                ds.m = j.at("m").get<int>();
                ds.d = j.at("d").get<int>();
                ds.K = j.at("K").get<int>();
                check_header(ds, source);
                have_header = true;
                continue;
            }
            LoggedRecord r;
            r.task = j.at("task_id").get<int>() - 1;
            r.action = j.at("action").get<int>() - 1;
            r.reward = j.at("reward").get<double>();
            const auto f = j.at("features").get<std::vector<double>>();
            r.features = Eigen::Map<const Vector>(f.data(), static_cast<Eigen::Index>(f.size()));
            if (r.task < 0 || r.task >= ds.m)
                fail(source, lineno, "task_id outside [1, m]");
            if (r.action < 0 || r.action >= ds.K)
                fail(source, lineno, "action outside [1, K]");
            if (r.features.size() != ds.d)
                fail(source, lineno, "expected " + std::to_string(ds.d) + " features");
            ds.records.push_back(std::move(r));
        } catch (const json::exception& e) {
            fail(source, lineno, std::string("bad field: ") + e.what());
        }
    }
    if (!have_header)
        fail(source, lineno, "missing header line");
    return ds;
}

void write_dataset_csv(const LoggedDataset& dataset, std::ostream& out)
{
    out << "# " << json{{"m", dataset.m}, {"d", dataset.d}, {"K", dataset.K}}.dump() << '\n';
    out << "task_id,action,reward";
    for (int i = 1; i <= dataset.d; ++i)
        out << ",f" << i;
    out << '\n';
    for (const auto& r : dataset.records) {
        out << r.task + 1 << ',' << r.action + 1 << ',' << json(r.reward).dump();
        for (Eigen::Index i = 0; i < r.features.size(); ++i)
            out << ',' << json(r.features(i)).dump();
        out << '\n';
    }
}

LoggedDataset read_dataset_csv(std::istream& in, const std::string& source)
{
    LoggedDataset ds;
    std::string line;
    std::size_t lineno = 0;
    bool have_meta = false;
    bool have_columns = false;
    int max_task = 0;
    int max_action = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = trim(line);
        if (text.empty())
            continue;
        if (text.front() == '#') {
            if (!have_columns && !have_meta) {
                try {
                    const auto j = json::parse(text.substr(1));
                    ds.m = j.at("m").get<int>();
                    ds.d = j.at("d").get<int>();
                    ds.K = j.at("K").get<int>();
                    have_meta = true;
                } catch (const json::exception&) {
                    // free-form comment
                }
            }
            continue;
        }
        const auto cells = split(text, ',');
        if (!have_columns) {
            if (cells.size() < 4 || cells[0] != "task_id" || cells[1] != "action" || cells[2] != "reward")
                fail(source, lineno, "expected header task_id,action,reward,f1..fd");
            const int d = static_cast<int>(cells.size()) - 3;
            if (have_meta && d != ds.d)
                fail(source, lineno, "column count disagrees with d in metadata");
            ds.d = d;
            have_columns = true;
            continue;
        }
        if (static_cast<int>(cells.size()) != ds.d + 3)
            fail(source, lineno, "expected " + std::to_string(ds.d + 3) + " columns");
        LoggedRecord r;
        r.task = parse_int(cells[0], source, lineno) - 1;
        r.action = parse_int(cells[1], source, lineno) - 1;
        r.reward = parse_double(cells[2], source, lineno);
        r.features.resize(ds.d);
        for (int i = 0; i < ds.d; ++i)
            r.features(i) = parse_double(cells[3 + i], source, lineno);
        if (r.task < 0 || (have_meta && r.task >= ds.m))
            fail(source, lineno, "task_id outside [1, m]");
        if (r.action < 0 || (have_meta && r.action >= ds.K))
            fail(source, lineno, "action outside [1, K]");
        max_task = std::max(max_task, r.task + 1);
        max_action = std::max(max_action, r.action + 1);
        ds.records.push_back(std::move(r));
    }
    if (!have_columns)
        fail(source, lineno, "missing column header");
    if (!have_meta) {
        ds.m = max_task;
        ds.K = max_action;
    }
    check_header(ds, source);
    return ds;
}

LoggedDataset read_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open dataset '" + path.string() + "'");
    if (path.extension() == ".csv")
        return read_dataset_csv(in, path.string());
    return read_dataset_jsonl(in, path.string());
}

void write_dataset(const LoggedDataset& dataset, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write dataset '" + path.string() + "'");
    if (path.extension() == ".csv")
        write_dataset_csv(dataset, out);
    else
        write_dataset_jsonl(dataset, out);
    if (!out)
        throw DataError("write failed for '" + path.string() + "'");
}

} // namespace hieropo
