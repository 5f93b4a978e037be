// SPDX-License-Identifier: Apache-2.0
//
// srspos - single-anchor positioning laboratory with 5G SRS waveforms
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "srspos/errors.hpp"
#include "srspos/harness.hpp"

static_assert(std::endian::native == std::endian::little,
              "snapshot payload I/O assumes a little-endian host");

namespace srspos {

namespace {

std::filesystem::path meta_path(const std::filesystem::path &basename) {
    std::filesystem::path p = basename;
    p += ".meta";
    return p;
}

std::filesystem::path iq_path(const std::filesystem::path &basename) {
    std::filesystem::path p = basename;
    p += ".iq";
    return p;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::multimap<std::string, std::string> parse_key_value_text(const std::string &text) {
    std::multimap<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        if (trim(line).empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw format_error("line " + std::to_string(line_no) + ": expected 'key = value'");
        out.emplace(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

std::multimap<std::string, std::string> parse_key_value_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw format_error("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_key_value_text(buffer.str());
}

void write_snapshot(const std::filesystem::path &basename, const MultiChannelCapture &capture,
                    const SnapshotMetadata &metadata) {
    if (capture.num_samples() != metadata.num_samples)
        throw usage_error("metadata num_samples does not match the capture");

    std::ostringstream meta;
    meta << "config_id = " << to_string(metadata.config_id) << "\n"
         << "sample_rate_hz = " << format_double(metadata.sample_rate_hz) << "\n"
         << "carrier_freq_hz = " << format_double(metadata.carrier_freq_hz) << "\n"
         << "num_channels = " << metadata.num_channels << "\n"
         << "num_samples = " << metadata.num_samples << "\n"
         << "timestamp_s = " << format_double(metadata.timestamp_s) << "\n"
         << "seed = " << metadata.seed << "\n";
    {
        std::ofstream out(meta_path(basename));
        if (!out)
            throw format_error("cannot write " + meta_path(basename).string());
        out << meta.str();
    }

    std::vector<float> payload;
    payload.reserve(capture.num_samples() * num_rx_channels * 2);
    for (const cvec &ch : capture.channels) {
        if (ch.size() != metadata.num_samples)
            throw usage_error("channel length mismatch in capture");
        for (const cd &v : ch) {
            payload.push_back(static_cast<float>(v.real()));
            payload.push_back(static_cast<float>(v.imag()));
        }
    }
    std::ofstream out(iq_path(basename), std::ios::binary);
    if (!out)
        throw format_error("cannot write " + iq_path(basename).string());
    out.write(reinterpret_cast<const char *>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
}

std::pair<MultiChannelCapture, SnapshotMetadata> read_snapshot(const std::filesystem::path &basename) {
    const auto kv = parse_key_value_file(meta_path(basename));
    auto get = [&](const std::string &key) -> std::string {
        const auto it = kv.find(key);
        if (it == kv.end())
            throw format_error("sidecar " + meta_path(basename).string() + " missing key '" + key + "'");
        return it->second;
    };

    SnapshotMetadata md;
    md.config_id = config_id_from_string(get("config_id"));
    md.sample_rate_hz = std::stod(get("sample_rate_hz"));
    md.carrier_freq_hz = std::stod(get("carrier_freq_hz"));
    md.num_channels = std::stoi(get("num_channels"));
    md.num_samples = std::stoull(get("num_samples"));
    md.timestamp_s = std::stod(get("timestamp_s"));
    md.seed = std::stoull(get("seed"));
    if (md.num_channels != num_rx_channels)
        throw format_error("snapshot has " + std::to_string(md.num_channels) + " channels, expected " +
                           std::to_string(num_rx_channels));

    std::ifstream in(iq_path(basename), std::ios::binary | std::ios::ate);
    if (!in)
        throw format_error("cannot open " + iq_path(basename).string());
    const auto actual = static_cast<std::size_t>(in.tellg());
    const std::size_t expected = md.num_samples * static_cast<std::size_t>(md.num_channels) * 2 * sizeof(float);
    if (actual != expected)
        throw format_error("payload " + iq_path(basename).string() + ": expected " +
                           std::to_string(expected) + " bytes, found " + std::to_string(actual));
    in.seekg(0);
    std::vector<float> payload(md.num_samples * static_cast<std::size_t>(md.num_channels) * 2);
    in.read(reinterpret_cast<char *>(payload.data()), static_cast<std::streamsize>(expected));
    if (!in)
        throw format_error("short read on " + iq_path(basename).string());

    MultiChannelCapture cap;
    cap.sample_rate_hz = md.sample_rate_hz;
    std::size_t idx = 0;
    for (cvec &ch : cap.channels) {
        ch.resize(md.num_samples);
        for (cd &v : ch) {
            const float re = payload[idx++];
            const float im = payload[idx++];
            v = {static_cast<double>(re), static_cast<double>(im)};
        }
    }
    return {std::move(cap), md};
}

MultiChannelCapture quantize_capture(const MultiChannelCapture &capture) {
    MultiChannelCapture out;
    out.sample_rate_hz = capture.sample_rate_hz;
    for (std::size_t c = 0; c < capture.channels.size(); ++c) {
        out.channels[c].resize(capture.channels[c].size());
        for (std::size_t n = 0; n < capture.channels[c].size(); ++n) {
            const cd v = capture.channels[c][n];
            out.channels[c][n] = {static_cast<double>(static_cast<float>(v.real())),
                                  static_cast<double>(static_cast<float>(v.imag()))};
        }
    }
    return out;
}

} // namespace srspos
