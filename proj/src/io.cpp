#include "precoder/io.hpp"

#include <fstream>
#include <istream>

namespace precoder::io {

json matrix_to_json(const Matrix& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = std::vector<double>(m.data(), m.data() + m.size());
    return j;
}

Matrix matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    const auto data = j.at("data").get<std::vector<double>>();
    return Matrix(rows, cols, data);
}

json channel_to_json(const ChannelPair& ch) {
    json j;
    j["h1"] = matrix_to_json(ch.h1);
    j["h2"] = matrix_to_json(ch.h2);
    j["power"] = ch.power;
    return j;
}

ChannelPair channel_from_json(const json& j) {
    return ChannelPair(matrix_from_json(j.at("h1")), matrix_from_json(j.at("h2")),
                       j.at("power").get<double>());
}

ChannelPair load_channel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open channel file: " + path);
    json j;
    try {
        in >> j;
        return channel_from_json(j);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, "bad channel file " + path + ": " + e.what());
    }
}

void save_channel(const ChannelPair& ch, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write channel file: " + path);
    out << channel_to_json(ch).dump(2) << '\n';
}

json sample_to_json(const Sample& s) {
    json j;
    j["channel_id"] = s.channel_id;
    j["mode"] = Mode::from_index(s.mode_index).name();
    j["n1"] = s.n1;
    j["n2"] = s.n2;
    j["feature"] = s.feature;
    j["target"] = s.target;
    return j;
}

Sample sample_from_json(const json& j) {
    Sample s;
    s.channel_id = j.at("channel_id").get<std::uint64_t>();
    s.mode_index = Mode::from_name(j.at("mode").get<std::string>()).index();
    s.n1 = j.at("n1").get<std::size_t>();
    s.n2 = j.at("n2").get<std::size_t>();
    s.feature = j.at("feature").get<std::vector<double>>();
    s.target = j.at("target").get<std::vector<double>>();
    if (s.feature.size() != kFeatureDim || s.target.size() != kTargetDim)
        throw Error(ErrorCode::DimensionMismatch, "sample has wrong feature/target length");
    return s;
}

std::vector<Sample> read_samples(std::istream& in) {
    std::vector<Sample> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::IoError, std::string("bad dataset line: ") + e.what());
        }
        if (j.contains("partial")) continue; // marker from an interrupted run
        samples.push_back(sample_from_json(j));
    }
    return samples;
}

std::vector<Sample> read_samples_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open dataset file: " + path);
    return read_samples(in);
}

json spec_to_json(const DatasetSpec& spec) {
    json j;
    j["num_channels"] = spec.num_channels;
    j["m"] = spec.m;
    j["n_min"] = spec.n_min;
    j["n_max"] = spec.n_max;
    j["power"] = spec.power;
    j["modes"] = spec.mode_indices;
    j["seed"] = spec.seed;
    return j;
}

DatasetSpec spec_from_json(const json& j) {
    DatasetSpec spec;
    spec.num_channels = j.value("num_channels", spec.num_channels);
    spec.m = j.value("m", spec.m);
    spec.n_min = j.value("n_min", spec.n_min);
    spec.n_max = j.value("n_max", spec.n_max);
    spec.power = j.value("power", spec.power);
    if (j.contains("modes")) spec.mode_indices = j.at("modes").get<std::vector<int>>();
    spec.seed = j.value("seed", spec.seed);
    spec.validate();
    return spec;
}

json manifest_to_json(const DatasetManifest& m) {
    json j;
    j["seed"] = m.seed;
    j["spec"] = spec_to_json(m.spec);
    j["counts"] = m.counts;
    j["total_samples"] = m.total_samples;
    j["failures"] = m.failures;
    return j;
}

json covariance_to_json(const CovarianceMatrix& q) {
    json j = matrix_to_json(q.matrix());
    j["trace"] = q.trace();
    return j;
}

} // namespace precoder::io
