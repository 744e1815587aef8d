#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "precoder/dataset.hpp"

namespace precoder::io {

using json = nlohmann::json;

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

/// Channel file schema: {"h1": {rows, cols, data row-major}, "h2": ..., "power": P}.
json channel_to_json(const ChannelPair& ch);
ChannelPair channel_from_json(const json& j);
ChannelPair load_channel(const std::string& path);
void save_channel(const ChannelPair& ch, const std::string& path);

json sample_to_json(const Sample& s);
Sample sample_from_json(const json& j);
std::vector<Sample> read_samples(std::istream& in);
std::vector<Sample> read_samples_file(const std::string& path);

json manifest_to_json(const DatasetManifest& m);
json spec_to_json(const DatasetSpec& spec);
DatasetSpec spec_from_json(const json& j);

json covariance_to_json(const CovarianceMatrix& q);

} // namespace precoder::io
