#include "dfl/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "dfl/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "bundle format assumes a little-endian host");

namespace dfl {

namespace {

constexpr char kMagic[8] = {'C', 'D', 'B', 'N', '-', 'D', 'F', 'L'};
constexpr std::uint8_t kVersion = 1;

struct Writer {
    std::vector<std::uint8_t> buf;

    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const std::uint8_t*>(p);
        buf.insert(buf.end(), c, c + n);
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f64s(const std::vector<double>& v) {
        u32(static_cast<std::uint32_t>(v.size()));
        bytes(v.data(), v.size() * sizeof(double));
    }
    void matrix(const Matrix2& m) {
        u32(static_cast<std::uint32_t>(m.rows));
        u32(static_cast<std::uint32_t>(m.cols));
        bytes(m.data.data(), m.data.size() * sizeof(double));
    }
};

struct Reader {
    const std::uint8_t* p;
    const std::uint8_t* end;

    void bytes(void* dst, std::size_t n) {
        if (static_cast<std::size_t>(end - p) < n) {
            throw IoError("bundle truncated");
        }
        std::memcpy(dst, p, n);
        p += n;
    }
    std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
    std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
    std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
    std::vector<double> f64s() {
        const std::uint32_t n = u32();
        if (static_cast<std::size_t>(end - p) < n * sizeof(double)) {
            throw IoError("bundle truncated");
        }
        std::vector<double> v(n);
        bytes(v.data(), n * sizeof(double));
        return v;
    }
    Matrix2 matrix() {
        const std::uint32_t r = u32();
        const std::uint32_t c = u32();
        if (static_cast<std::size_t>(end - p) <
            static_cast<std::size_t>(r) * c * sizeof(double)) {
            throw IoError("bundle truncated");
        }
        Matrix2 m(r, c);
        bytes(m.data.data(), m.data.size() * sizeof(double));
        return m;
    }
};

void write_layer(Writer& w, const DenseLayer& l) {
    w.matrix(l.weights);
    w.f64s(l.bias);
    w.u8(l.act == Activation::sigmoid ? 0 : 1);
}

DenseLayer read_layer(Reader& r) {
    DenseLayer l;
    l.weights = r.matrix();
    l.bias = r.f64s();
    l.act = r.u8() == 0 ? Activation::sigmoid : Activation::linear;
    return l;
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
    Writer w;
    w.bytes(kMagic, 8);
    w.u8(kVersion);
    w.u64(bundle.config_fingerprint);

    w.f64s(bundle.normalization.mean);
    w.f64s(bundle.normalization.stddev);
    w.f64s(bundle.feature_normalization.mean);
    w.f64s(bundle.feature_normalization.stddev);

    w.u32(static_cast<std::uint32_t>(bundle.stack.input_side));
    w.u32(static_cast<std::uint32_t>(bundle.stack.layers.size()));
    for (std::size_t l = 0; l < bundle.stack.layers.size(); ++l) {
        const Crbm& c = bundle.stack.layers[l];
        w.u32(static_cast<std::uint32_t>(bundle.stack.input_sides[l]));
        w.u32(static_cast<std::uint32_t>(c.kernel_side));
        w.u32(static_cast<std::uint32_t>(c.groups()));
        w.u32(static_cast<std::uint32_t>(c.channels));
        w.u32(static_cast<std::uint32_t>(c.pool_block));
        w.u8(c.mode == VisibleMode::binary ? 0 : 1);
        for (const auto& k : c.kernels) {
            w.matrix(k);
        }
        w.f64s(c.hidden_bias);
        w.f64s(c.visible_bias);
    }

    w.u32(static_cast<std::uint32_t>(bundle.net.encoder.size()));
    for (const auto& l : bundle.net.encoder) {
        write_layer(w, l);
    }
    w.u32(static_cast<std::uint32_t>(bundle.net.decoder.size()));
    for (const auto& l : bundle.net.decoder) {
        write_layer(w, l);
    }
    w.f64s(bundle.net.input_std);

    w.matrix(bundle.head.weights);
    w.f64s(bundle.head.bias);

    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, w.buf.data(), static_cast<uInt>(w.buf.size())));
    w.u32(crc);

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write bundle: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(w.buf.data()),
              static_cast<std::streamsize>(w.buf.size()));
    if (!out) {
        throw IoError("bundle write failed: " + path.string());
    }
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open bundle: " + path.string());
    }
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    if (buf.size() < 13) {
        throw IoError("bundle truncated: " + path.string());
    }
    if (std::memcmp(buf.data(), kMagic, 8) != 0) {
        throw IoError(path.string() + ": not a CDBN-DFL bundle");
    }
    if (buf[8] != kVersion) {
        throw IoError(path.string() + ": unsupported bundle version " +
                      std::to_string(static_cast<int>(buf[8])));
    }
    std::uint32_t stored_crc = 0;
    std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
    const auto actual_crc = static_cast<std::uint32_t>(
        crc32(0L, buf.data(), static_cast<uInt>(buf.size() - 4)));
    if (stored_crc != actual_crc) {
        throw IoError(path.string() + ": checksum mismatch, bundle is corrupted");
    }

    Reader r{buf.data() + 9, buf.data() + buf.size() - 4};
    ModelBundle b;
    b.config_fingerprint = r.u64();
    b.normalization.mean = r.f64s();
    b.normalization.stddev = r.f64s();
    b.feature_normalization.mean = r.f64s();
    b.feature_normalization.stddev = r.f64s();

    b.stack.input_side = r.u32();
    const std::uint32_t n_layers = r.u32();
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        Crbm c;
        b.stack.input_sides.push_back(r.u32());
        c.input_side = b.stack.input_sides.back();
        c.kernel_side = r.u32();
        const std::uint32_t groups = r.u32();
        c.channels = r.u32();
        c.pool_block = r.u32();
        c.mode = r.u8() == 0 ? VisibleMode::binary : VisibleMode::gaussian;
        c.kernels.reserve(static_cast<std::size_t>(groups) * c.channels);
        for (std::size_t k = 0; k < static_cast<std::size_t>(groups) * c.channels; ++k) {
            c.kernels.push_back(r.matrix());
        }
        c.hidden_bias = r.f64s();
        c.visible_bias = r.f64s();
        b.stack.layers.push_back(std::move(c));
    }

    const std::uint32_t n_enc = r.u32();
    for (std::uint32_t l = 0; l < n_enc; ++l) {
        b.net.encoder.push_back(read_layer(r));
    }
    const std::uint32_t n_dec = r.u32();
    for (std::uint32_t l = 0; l < n_dec; ++l) {
        b.net.decoder.push_back(read_layer(r));
    }
    b.net.input_std = r.f64s();

    b.head.weights = r.matrix();
    b.head.bias = r.f64s();
    if (r.p != r.end) {
        throw IoError(path.string() + ": trailing bytes in bundle");
    }
    return b;
}

}  // namespace dfl
