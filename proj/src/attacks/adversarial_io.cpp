#include "advl/attacks/adversarial_io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "advl/core/error.hpp"
#include "advl/core/pixmap.hpp"

namespace advl::attacks {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'A', 'D', 'V', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint64_t v) {
    if (v > 0xffffffffULL) throw UsageError("perturbation file: value does not fit in u32");
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct ByteReader {
    const std::vector<unsigned char>& b;
    std::size_t pos = 0;

    std::uint32_t u32(const char* what) {
        if (b.size() - pos < 4) throw FormatError(std::string("perturbation file truncated reading ") + what, pos);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[pos++]) << (8 * i);
        return v;
    }
};

std::string format_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void save_perturbations(const PerturbationSet& set, const fs::path& path) {
    if (set.signs.size() != set.sample_ids.size()) throw UsageError("perturbation set ids and signs differ in count");
    std::string out(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, set.surrogate.size());
    out += set.surrogate;
    put_u32(out, set.signs.size());
    const Shape shape = set.signs.empty() ? Shape{} : set.signs.front().shape();
    put_u32(out, shape.size());
    for (auto d : shape) put_u32(out, d);
    for (std::size_t i = 0; i < set.signs.size(); ++i) {
        if (set.signs[i].shape() != shape) throw UsageError("perturbation tensors differ in shape");
        put_u32(out, set.sample_ids[i]);
        for (double s : set.signs[i].data()) {
            if (s != -1.0 && s != 0.0 && s != 1.0) throw UsageError("perturbation contains a non-sign value");
            out.push_back(static_cast<char>(static_cast<signed char>(s)));
        }
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

PerturbationSet load_perturbations(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    const std::vector<unsigned char> b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (b.size() < 4 || std::memcmp(b.data(), kMagic, 4) != 0) throw FormatError("perturbation file: bad magic", 0);
    ByteReader r{b, 4};
    if (const auto v = r.u32("version"); v != kVersion)
        throw FormatError("perturbation file: unsupported version " + std::to_string(v), 4);
    PerturbationSet set;
    const std::uint32_t name_len = r.u32("name length");
    if (b.size() - r.pos < name_len) throw FormatError("perturbation file truncated reading name", r.pos);
    set.surrogate.assign(b.begin() + static_cast<std::ptrdiff_t>(r.pos),
                         b.begin() + static_cast<std::ptrdiff_t>(r.pos + name_len));
    r.pos += name_len;
    const std::uint32_t count = r.u32("count");
    const std::uint32_t rank = r.u32("rank");
    if (rank > 8) throw FormatError("perturbation file: implausible rank", r.pos - 4);
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(r.u32("dims"));
    const std::size_t per = count == 0 ? 0 : shape_size(shape);
    if ((b.size() - r.pos) != static_cast<std::size_t>(count) * (4 + per))
        throw FormatError("perturbation file: payload length does not match header", r.pos);
    for (std::uint32_t i = 0; i < count; ++i) {
        set.sample_ids.push_back(r.u32("sample id"));
        Tensor t(shape);
        for (std::size_t k = 0; k < per; ++k) {
            const auto s = static_cast<signed char>(b[r.pos]);
            if (s < -1 || s > 1) throw FormatError("perturbation file: sign out of range", r.pos);
            t[k] = s;
            ++r.pos;
        }
        set.signs.push_back(std::move(t));
    }
    return set;
}

void write_adversarial_set(const AdversarialSet& set, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir / "images", ec);
    if (ec) throw IoError("cannot create " + (dir / "images").string() + ": " + ec.message());
    {
        std::ofstream m(dir / "manifest.txt");
        if (!m) throw IoError("cannot write " + (dir / "manifest.txt").string());
        m << "# adversarial test set\n"
          << "surrogate = " << set.surrogate << "\n"
          << "mode = " << mode_name(set.mode) << "\n"
          << "epsilon = " << format_exact(set.epsilon) << "\n"
          << "samples = " << set.data.size() << "\n";
    }
    std::ofstream labels(dir / "labels.csv");
    if (!labels) throw IoError("cannot write " + (dir / "labels.csv").string());
    labels << "sample_id,label\n";
    for (std::size_t i = 0; i < set.data.size(); ++i) {
        labels << set.sample_ids[i] << ',' << set.data.labels[i] << '\n';
        const Tensor& img = set.data.images[i];
        const Tensor plane = img.reshaped({img.dim(0) * img.dim(1), img.dim(2)});
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.pgm", set.sample_ids[i]);
        pixmap::write(dir / "images" / name, pixmap::from_gray(plane, 65535));
    }
}

AdversarialManifest read_manifest(const fs::path& dir) {
    const fs::path path = dir / "manifest.txt";
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        const std::size_t here = offset;
        offset += line.size() + 1;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("manifest: expected key = value in " + path.string(), here);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto z = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, z - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    for (const char* key : {"surrogate", "mode", "epsilon", "samples"})
        if (!kv.count(key)) throw FormatError(std::string("manifest: missing key '") + key + "' in " + path.string(), 0);
    AdversarialManifest m;
    m.surrogate = kv["surrogate"];
    try {
        m.mode = parse_mode(kv["mode"]);
        m.epsilon = std::stod(kv["epsilon"]);
        m.samples = std::stoul(kv["samples"]);
    } catch (const std::exception& e) {
        throw FormatError("manifest: bad value in " + path.string() + ": " + e.what(), 0);
    }
    return m;
}

AdversarialSet load_adversarial_set(const fs::path& dir, const Dataset& clean, const PerturbationSet& perturbations) {
    const AdversarialManifest m = read_manifest(dir);
    if (m.surrogate != perturbations.surrogate)
        throw FormatError("manifest surrogate '" + m.surrogate + "' does not match perturbations from '" +
                              perturbations.surrogate + "'",
                          0);
    if (m.samples != clean.size() || perturbations.signs.size() != clean.size())
        throw FormatError("manifest sample count " + std::to_string(m.samples) + " does not match clean set of " +
                              std::to_string(clean.size()),
                          0);
    return build_adversarial_sets(perturbations, clean, {m.epsilon}, m.mode).front();
}

}  // namespace advl::attacks
