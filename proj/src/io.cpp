#include "pfloc/io.hpp"

#include "json_util.hpp"
#include "pfloc/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pfloc {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    return out;
}

void check_written(std::ostream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

SoundSpeedProfile parse_ssp(const json& node, std::string_view source) {
    if (!node.is_array()) throw ParseError(fmt::format("{}: 'ssp' must be an array", source));
    std::vector<SspKnot> knots;
    for (std::size_t i = 0; i < node.size(); ++i) {
        const auto& e = node[i];
        std::string where = fmt::format("{}: ssp[{}]", source, i);
        if (e.is_array()) {
            if (e.size() != 2) throw ParseError(where + " must be a [depth, speed] pair");
            knots.push_back({detail::as_number(e[0], where), detail::as_number(e[1], where)});
        } else if (e.is_object()) {
            detail::reject_unknown(e, {"depth", "speed"}, where);
            knots.push_back({detail::require_number(e, "depth", where), detail::require_number(e, "speed", where)});
        } else {
            throw ParseError(where + " must be a [depth, speed] pair or an object");
        }
    }
    return SoundSpeedProfile(std::move(knots));
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) return out;
        start = comma + 1;
    }
}

double parse_field(std::string_view text, std::string_view source, std::size_t line) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ParseError(fmt::format("{}:{}: invalid number '{}'", source, line, text));
    return v;
}

/// Reads a CSV with the exact `header`, returning rows of numbers.
std::vector<std::vector<double>> read_csv(std::istream& in, std::string_view header, std::string_view source) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(fmt::format("{}: empty file, expected header '{}'", source, header));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw ParseError(fmt::format("{}:1: expected header '{}', got '{}'", source, header, line));
    const std::size_t columns = split_csv(header).size();
    std::vector<std::vector<double>> rows;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv(line);
        if (fields.size() != columns)
            throw ParseError(fmt::format("{}:{}: expected {} fields, got {}", source, number, columns, fields.size()));
        std::vector<double> row;
        row.reserve(columns);
        for (auto f : fields) row.push_back(parse_field(f, source, number));
        rows.push_back(std::move(row));
    }
    return rows;
}

constexpr std::string_view kTruthHeader = "time_s,range_m,depth_m,speed_mps";
constexpr std::string_view kEstimateHeader = "time_s,range_m,depth_m,speed_mps,ess";

}  // namespace

Waveguide parse_environment(std::string_view text, std::string_view source) {
    json doc = detail::parse_json(text, source);
    if (!doc.is_object()) throw ParseError(fmt::format("{}: top level must be an object", source));
    detail::reject_unknown(doc, {"ssp", "bottom_depth", "receiver_depth"}, source);
    if (!doc.contains("ssp")) throw ParseError(fmt::format("{}: missing key 'ssp'", source));
    auto ssp = parse_ssp(doc["ssp"], source);
    double bottom = detail::require_number(doc, "bottom_depth", source);
    double receiver = kDefaultReceiverDepth;
    if (doc.contains("receiver_depth")) receiver = detail::require_number(doc, "receiver_depth", source);
    return Waveguide(std::move(ssp), bottom, receiver);
}

Waveguide load_environment(const std::filesystem::path& path) {
    return parse_environment(read_text_file(path), path.string());
}

std::string environment_to_json(const Waveguide& wg) {
    ordered_json doc;
    ordered_json ssp = ordered_json::array();
    for (const auto& k : wg.ssp().knots()) ssp.push_back({k.depth, k.speed});
    doc["ssp"] = std::move(ssp);
    doc["bottom_depth"] = wg.bottom_depth();
    doc["receiver_depth"] = wg.receiver_depth();
    return doc.dump(2) + "\n";
}

void write_observations(std::ostream& out, std::span<const TimedObservation> epochs) {
    for (const auto& e : epochs) {
        ordered_json line;
        line["t_index"] = e.t_index;
        line["time_s"] = e.time_s;
        line["doas"] = std::vector<double>(e.z.values().begin(), e.z.values().end());
        out << line.dump() << '\n';
    }
}

std::vector<TimedObservation> read_observations(std::istream& in, std::string_view source) {
    std::vector<TimedObservation> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::string where = fmt::format("{}:{}", source, number);
        json doc = detail::parse_json(line, where);
        if (!doc.is_object()) throw ParseError(where + ": each line must be a JSON object");
        detail::reject_unknown(doc, {"t_index", "time_s", "doas"}, where);
        TimedObservation obs;
        obs.t_index = detail::require_index(doc, "t_index", where);
        obs.time_s = detail::require_number(doc, "time_s", where);
        if (!doc.contains("doas") || !doc["doas"].is_array()) throw ParseError(where + ": 'doas' must be an array");
        std::vector<double> z;
        for (const auto& v : doc["doas"]) z.push_back(detail::as_number(v, where + ": doas"));
        try {
            obs.z = ObservationSet(std::move(z));
        } catch (const DomainError& e) {
            throw ParseError(fmt::format("{}: {}", where, e.what()));
        }
        if (!out.empty() && !(obs.time_s > out.back().time_s))
            throw ParseError(where + ": time_s must increase from line to line");
        out.push_back(std::move(obs));
    }
    return out;
}

void save_observations(const std::filesystem::path& path, std::span<const TimedObservation> epochs) {
    auto out = open_out(path);
    write_observations(out, epochs);
    check_written(out, path);
}

std::vector<TimedObservation> load_observations(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_observations(in, path.string());
}

void write_truth(std::ostream& out, const GroundTruthTrack& truth) {
    out << kTruthHeader << '\n';
    for (const auto& s : truth.samples)
        out << fmt::format("{},{},{},{}\n", s.time_s, s.state.range, s.state.depth, s.state.range_speed);
}

GroundTruthTrack read_truth(std::istream& in, std::string_view source) {
    GroundTruthTrack track;
    std::size_t n = 0;
    for (const auto& row : read_csv(in, kTruthHeader, source)) {
        if (!track.samples.empty() && !(row[0] > track.samples.back().time_s))
            throw ParseError(fmt::format("{}: time_s must be strictly increasing", source));
        track.samples.push_back({n++, row[0], {row[1], row[2], row[3]}});
    }
    return track;
}

void save_truth(const std::filesystem::path& path, const GroundTruthTrack& truth) {
    auto out = open_out(path);
    write_truth(out, truth);
    check_written(out, path);
}

GroundTruthTrack load_truth(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_truth(in, path.string());
}

void write_estimates(std::ostream& out, std::span<const TrackEstimate> estimates) {
    out << kEstimateHeader << '\n';
    for (const auto& e : estimates)
        out << fmt::format("{},{},{},{},{}\n", e.time_s, e.state.range, e.state.depth, e.state.range_speed, e.ess);
}

std::vector<TrackEstimate> read_estimates(std::istream& in, std::string_view source) {
    std::vector<TrackEstimate> out;
    for (const auto& row : read_csv(in, kEstimateHeader, source))
        out.push_back({row[0], {row[1], row[2], row[3]}, row[4], 0.0, 0.0});
    return out;
}

void save_estimates(const std::filesystem::path& path, std::span<const TrackEstimate> estimates) {
    auto out = open_out(path);
    write_estimates(out, estimates);
    check_written(out, path);
}

std::vector<TrackEstimate> load_estimates(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_estimates(in, path.string());
}

EvaluationReport evaluate(std::span<const TrackEstimate> estimates, const GroundTruthTrack& truth, std::string label) {
    EvaluationReport report;
    report.label = std::move(label);
    const auto& samples = truth.samples;
    std::size_t j = 0;
    double se_r = 0.0;
    double se_d = 0.0;
    for (const auto& e : estimates) {
        while (j < samples.size() && samples[j].time_s < e.time_s - 1e-6) ++j;
        if (j == samples.size() || std::abs(samples[j].time_s - e.time_s) > 1e-6)
            throw DomainError(fmt::format("no truth sample at t = {} s", e.time_s));
        double dr = e.state.range - samples[j].state.range;
        double dd = e.state.depth - samples[j].state.depth;
        report.epochs.push_back({e.time_s, dr, dd});
        se_r += dr * dr;
        se_d += dd * dd;
    }
    if (!report.epochs.empty()) {
        auto n = static_cast<double>(report.epochs.size());
        report.rmse_range = std::sqrt(se_r / n);
        report.rmse_depth = std::sqrt(se_d / n);
    }
    return report;
}

std::string report_to_json(std::span<const EvaluationReport> reports) {
    ordered_json runs = ordered_json::array();
    for (const auto& r : reports) {
        ordered_json run;
        run["label"] = r.label;
        run["epochs"] = r.epochs.size();
        run["rmse_range_m"] = r.rmse_range;
        run["rmse_depth_m"] = r.rmse_depth;
        ordered_json errors = ordered_json::array();
        for (const auto& e : r.epochs)
            errors.push_back({{"time_s", e.time_s}, {"range_error_m", e.range_error}, {"depth_error_m", e.depth_error}});
        run["errors"] = std::move(errors);
        runs.push_back(std::move(run));
    }
    ordered_json doc;
    doc["runs"] = std::move(runs);
    return doc.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(fmt::format("failed reading '{}'", path.string()));
    return std::move(ss).str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    auto out = open_out(path);
    out << text;
    check_written(out, path);
}

}  // namespace pfloc
