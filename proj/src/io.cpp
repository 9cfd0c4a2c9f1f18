#include "shdiff/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace shdiff {

namespace {

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
}

double read_f64(std::istream& is) {
    const std::uint64_t bits = read_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

std::string fmt_double(double v) {
    char buf[40];
    // Integral values print without an exponent ("80", not "8e+01").
    if (std::isfinite(v) && v == std::rint(v) && std::fabs(v) < 9.007199254740992e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

void ensure_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw std::runtime_error("cannot create directory: " + dir);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f.write(text.data(), std::streamsize(text.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void save_batch(const std::string& path, const SampleBatch& batch) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "shdiff-batch 1\n";
    write_u64(f, std::uint64_t(batch.tag));
    write_f64(f, batch.sigma);
    write_u64(f, batch.points.rows);
    write_u64(f, batch.points.cols);
    f.write(reinterpret_cast<const char*>(batch.points.data.data()),
            std::streamsize(batch.points.data.size() * sizeof(double)));
    if (!f) throw std::runtime_error("write failed: " + path);
}

SampleBatch load_batch(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    int version = 0;
    f >> magic >> version;
    f.ignore(1);  // newline
    if (!f || magic != "shdiff-batch" || version != 1)
        throw std::runtime_error("not a sample-batch file: " + path);
    SampleBatch batch;
    const std::uint64_t tag = read_u64(f);
    if (tag > std::uint64_t(SampleTag::generated))
        throw std::runtime_error("sample-batch file: bad tag in " + path);
    batch.tag = SampleTag(tag);
    batch.sigma = read_f64(f);
    const std::uint64_t rows = read_u64(f);
    const std::uint64_t cols = read_u64(f);
    if (!f || cols == 0 || rows > (1ull << 40) / (cols ? cols : 1))
        throw std::runtime_error("sample-batch file: bad shape in " + path);
    batch.points = Matrix(rows, cols);
    f.read(reinterpret_cast<char*>(batch.points.data.data()),
           std::streamsize(rows * cols * sizeof(double)));
    if (!f || f.gcount() != std::streamsize(rows * cols * sizeof(double)))
        throw std::runtime_error("sample-batch file: truncated payload in " + path);
    return batch;
}

std::string fnv1a_file_hex(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof buf);
        const std::streamsize got = f.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

}  // namespace shdiff
