#include "eestim/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "eestim/error.hpp"

namespace eestim::io {
namespace {

struct Token {
    std::string text;
    std::size_t line;
};

// Whitespace tokenizer tracking line numbers; tolerates CRLF.
class Tokenizer {
public:
    explicit Tokenizer(std::istream& in) : in_(in) {}

    bool next(Token& tok) {
        while (pos_ >= words_.size()) {
            std::string raw;
            if (!std::getline(in_, raw)) return false;
            ++line_;
            if (!raw.empty() && raw.back() == '\r') raw.pop_back();
            if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
            words_.clear();
            pos_ = 0;
            std::istringstream ss(raw);
            std::string w;
            while (ss >> w) words_.push_back(w);
        }
        tok = Token{words_[pos_++], line_};
        return true;
    }

    Token expect(std::string_view what) {
        Token t;
        if (!next(t)) throw ParseError(line_ + 1, "unexpected end of input, expected " + std::string(what));
        return t;
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::istream& in_;
    std::vector<std::string> words_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
};

long parse_int(const Token& t) {
    long v = 0;
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    if (*b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) throw ParseError(t.line, "expected an integer, got '" + t.text + "'");
    return v;
}

std::size_t parse_count(const Token& t) {
    const long v = parse_int(t);
    if (v < 0) throw ParseError(t.line, "expected a non-negative count, got '" + t.text + "'");
    return static_cast<std::size_t>(v);
}

double parse_double(const Token& t) {
    double v = 0.0;
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    if (*b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) throw ParseError(t.line, "expected a number, got '" + t.text + "'");
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return in;
}

bool read_state_from(Tokenizer& tz, BinaryState& out) {
    Token enc;
    if (!tz.next(enc)) return false;
    Encoding encoding;
    if (enc.text == "spin") encoding = Encoding::Spin;
    else if (enc.text == "tie") encoding = Encoding::Tie;
    else throw ParseError(enc.line, "unknown encoding '" + enc.text + "' (expected spin or tie)");

    const Token shape = tz.expect("layout");
    Layout layout;
    if (shape.text == "chain") {
        layout = Layout::chain(parse_count(tz.expect("chain length")));
    } else if (shape.text == "digraph") {
        layout = Layout::digraph(parse_count(tz.expect("node count")));
    } else {
        const std::size_t rows = parse_count(shape);
        layout = Layout::grid(rows, parse_count(tz.expect("column count")));
    }
    std::vector<std::int8_t> values(layout.num_sites());
    for (auto& v : values) {
        const Token t = tz.expect("state entry");
        const long x = parse_int(t);
        if (!BinaryState::legal(encoding, static_cast<int>(x))) {
            throw ParseError(t.line, "illegal " + enc.text + " value '" + t.text + "'");
        }
        v = static_cast<std::int8_t>(x);
    }
    out = BinaryState(encoding, layout, std::move(values));
    return true;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, p);
}

void write_state(std::ostream& out, const BinaryState& x) {
    const Layout& l = x.layout();
    out << to_string(x.encoding()) << ' ';
    std::size_t per_line = x.size();
    switch (l.kind) {
        case LayoutKind::Grid:
            out << l.rows << ' ' << l.cols << '\n';
            per_line = l.cols;
            break;
        case LayoutKind::Chain: out << "chain " << l.nodes << '\n'; break;
        case LayoutKind::Digraph:
            out << "digraph " << l.nodes << '\n';
            per_line = l.nodes > 1 ? l.nodes - 1 : 1;
            break;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        out << static_cast<int>(x[i]);
        out << (((i + 1) % per_line == 0 || i + 1 == x.size()) ? '\n' : ' ');
    }
}

BinaryState read_state(std::istream& in) {
    Tokenizer tz(in);
    BinaryState x;
    if (!read_state_from(tz, x)) throw ParseError(1, "empty state file");
    Token extra;
    if (tz.next(extra)) throw ParseError(extra.line, "trailing data after state: '" + extra.text + "'");
    return x;
}

std::vector<BinaryState> read_states(std::istream& in) {
    Tokenizer tz(in);
    std::vector<BinaryState> out;
    BinaryState x;
    while (read_state_from(tz, x)) out.push_back(x);
    if (out.empty()) throw ParseError(1, "no states found");
    return out;
}

void write_state_file(const std::filesystem::path& path, const BinaryState& x) {
    auto out = open_out(path);
    write_state(out, x);
}

void write_states_file(const std::filesystem::path& path, const std::vector<BinaryState>& xs) {
    auto out = open_out(path);
    for (const auto& x : xs) write_state(out, x);
}

BinaryState read_state_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_state(in);
}

std::vector<BinaryState> read_states_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_states(in);
}

void write_edge_list(std::ostream& out, const BinaryState& graph) {
    if (graph.layout().kind != LayoutKind::Digraph || graph.encoding() != Encoding::Tie) {
        throw InvalidInput("edge lists hold tie digraphs only");
    }
    const std::size_t n = graph.layout().nodes;
    out << n << '\n';
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && graph[tie_index(n, i, j)]) out << i << ' ' << j << '\n';
}

BinaryState read_edge_list(std::istream& in) {
    Tokenizer tz(in);
    const Token head = tz.expect("node count");
    const std::size_t n = parse_count(head);
    if (n < 2) throw ParseError(head.line, "edge list needs at least 2 nodes");
    BinaryState g(Encoding::Tie, Layout::digraph(n));
    Token a;
    while (tz.next(a)) {
        const Token b = tz.expect("arc head");
        const std::size_t i = parse_count(a), j = parse_count(b);
        if (i >= n || j >= n) throw ParseError(a.line, "arc endpoint out of range");
        if (i == j) throw ParseError(a.line, "self-loops are not tie variables");
        g.set(tie_index(n, i, j), 1);
    }
    return g;
}

void write_image(std::ostream& out, const Image& image) {
    out << "real " << image.rows << ' ' << image.cols << '\n';
    for (std::size_t i = 0; i < image.values.size(); ++i) {
        out << format_double(image.values[i]);
        out << (((i + 1) % image.cols == 0) ? '\n' : ' ');
    }
}

Image read_image(std::istream& in) {
    Tokenizer tz(in);
    const Token tag = tz.expect("'real'");
    if (tag.text != "real") throw ParseError(tag.line, "expected 'real' image header");
    Image img;
    img.rows = parse_count(tz.expect("rows"));
    img.cols = parse_count(tz.expect("cols"));
    img.values.resize(img.rows * img.cols);
    for (auto& v : img.values) v = parse_double(tz.expect("pixel value"));
    return img;
}

void write_trace(std::ostream& out, const EstimationTrace& trace) {
    const std::size_t L = trace.num_params();
    out << 't';
    for (std::size_t i = 1; i <= L; ++i) out << ",theta_" << i;
    for (std::size_t i = 1; i <= L; ++i) out << ",d_" << i;
    out << ",accepted\n";
    for (std::size_t t = 0; t < trace.size(); ++t) {
        out << (t + 1);
        for (double v : trace.theta(t)) out << ',' << format_double(v);
        for (double v : trace.d(t)) out << ',' << format_double(v);
        out << ',' << trace.accepted(t) << '\n';
    }
}

void write_trace_file(const std::filesystem::path& path, const EstimationTrace& trace) {
    auto out = open_out(path);
    write_trace(out, trace);
}

EstimationTrace read_trace(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    auto getline = [&]() {
        if (!std::getline(in, line)) return false;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };
    if (!getline()) throw ParseError(1, "empty trace");
    const auto header = split_csv(line);
    if (header.size() < 2 || (header.size() - 2) % 2 != 0 || header.front() != "t" || header.back() != "accepted") {
        throw ParseError(lineno, "trace header must be t,theta_1..theta_L,d_1..d_L,accepted");
    }
    const std::size_t L = (header.size() - 2) / 2;
    for (std::size_t i = 0; i < L; ++i) {
        if (header[1 + i] != "theta_" + std::to_string(i + 1) || header[1 + L + i] != "d_" + std::to_string(i + 1)) {
            throw ParseError(lineno, "unexpected trace column name");
        }
    }
    std::vector<std::vector<double>> thetas, ds;
    std::vector<std::size_t> acc;
    while (getline()) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw ParseError(lineno, "expected " + std::to_string(header.size()) + " columns, got " +
                                         std::to_string(cells.size()));
        }
        ParamVector th(L);
        StatVector d(L);
        for (std::size_t i = 0; i < L; ++i) {
            th[i] = parse_double(Token{cells[1 + i], lineno});
            d[i] = parse_double(Token{cells[1 + L + i], lineno});
        }
        thetas.push_back(std::move(th));
        ds.push_back(std::move(d));
        acc.push_back(parse_count(Token{cells.back(), lineno}));
    }
    // The CSV carries no theta_0; the first row stands in for it.
    EstimationTrace trace(thetas.empty() ? ParamVector(L, 0.0) : thetas.front());
    for (std::size_t t = 0; t < thetas.size(); ++t) trace.append(thetas[t], ds[t], acc[t]);
    return trace;
}

EstimationTrace read_trace_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_trace(in);
}

std::map<std::string, std::string> read_config(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "expected 'key = value'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError(lineno, "empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_config(in);
}

}  // namespace eestim::io
