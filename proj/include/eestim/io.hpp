#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "eestim/estimators.hpp"
#include "eestim/state.hpp"

namespace eestim::io {

// Shortest decimal that round-trips, '.' separator regardless of locale.
std::string format_double(double v);

// State text format. Header "<encoding> <rows> <cols>", "<encoding> chain
// <N>" or "<encoding> digraph <N>", then the entries row-major, whitespace
// separated. Several states may follow one another in one stream.
void write_state(std::ostream& out, const BinaryState& x);
BinaryState read_state(std::istream& in);
std::vector<BinaryState> read_states(std::istream& in);

void write_state_file(const std::filesystem::path& path, const BinaryState& x);
void write_states_file(const std::filesystem::path& path, const std::vector<BinaryState>& xs);
BinaryState read_state_file(const std::filesystem::path& path);
std::vector<BinaryState> read_states_file(const std::filesystem::path& path);

// Digraph edge list: first line N, then one "i j" arc per line, 0-indexed.
void write_edge_list(std::ostream& out, const BinaryState& graph);
BinaryState read_edge_list(std::istream& in);

// Real-valued image: header "real <rows> <cols>" then row-major values.
struct Image {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
};
void write_image(std::ostream& out, const Image& image);
Image read_image(std::istream& in);

// Trace CSV: "t,theta_1..theta_L,d_1..d_L,accepted", one row per update.
void write_trace(std::ostream& out, const EstimationTrace& trace);
void write_trace_file(const std::filesystem::path& path, const EstimationTrace& trace);
EstimationTrace read_trace(std::istream& in);
EstimationTrace read_trace_file(const std::filesystem::path& path);

// `key = value` per line; '#' starts a comment.
std::map<std::string, std::string> read_config(std::istream& in);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

}  // namespace eestim::io
