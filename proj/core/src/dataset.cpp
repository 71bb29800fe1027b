#include "poisonlab/dataset.hpp"

#include "poisonlab/csv.hpp"
#include "poisonlab/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>

static_assert(std::endian::native == std::endian::little,
              "sample tensor files are little-endian; big-endian hosts are unsupported");

namespace poisonlab {

std::string split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::SurrogateSample: return "surrogate-sample";
    }
    return "train";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "validation") return Split::Validation;
    if (name == "surrogate-sample") return Split::SurrogateSample;
    throw FormatError("unknown split name: " + name);
}

std::vector<std::size_t> Dataset::indices_of_class(std::size_t y) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].label == y) out.push_back(i);
    return out;
}

namespace {

struct Rgb {
    float r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
    h = h - std::floor(h);
    const double i = std::floor(h * 6.0);
    const double f = h * 6.0 - i;
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - f * s);
    const double t = v * (1.0 - (1.0 - f) * s);
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(i) % 6) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        case 5: r = v; g = p; b = q; break;
    }
    return {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
}

enum class ShapeKind : int {
    Disc = 0,
    Square,
    Triangle,
    Ring,
    Cross,
    Diamond,
    Bars,
    Checker,
    kCount
};

struct ClassTemplate {
    ShapeKind kind;
    double cx, cy;   // center, fraction of image size
    double radius;   // fraction of image size
    Rgb color;
    double angle;    // bar phase / checker offset
};

// Templates depend on the class id alone so the same class renders the same
// way in every generated dataset.
ClassTemplate class_template(std::size_t class_id) {
    RandomStream ts(static_cast<std::uint64_t>(class_id), "class-template");
    ClassTemplate t;
    t.kind = static_cast<ShapeKind>(class_id % static_cast<std::size_t>(ShapeKind::kCount));
    t.cx = ts.uniform(0.35, 0.65);
    t.cy = ts.uniform(0.35, 0.65);
    t.radius = ts.uniform(0.22, 0.34);
    const double golden = 0.61803398874989479;
    const double hue = std::fmod(static_cast<double>(class_id) * golden + 0.13, 1.0);
    t.color = hsv_to_rgb(hue, 0.85, 0.95);
    t.angle = ts.uniform(0.0, 1.0);
    return t;
}

bool inside_shape(const ClassTemplate& t, double nx, double ny) {
    const double dx = nx - t.cx;
    const double dy = ny - t.cy;
    const double r = t.radius;
    switch (t.kind) {
        case ShapeKind::Disc:
            return dx * dx + dy * dy <= r * r;
        case ShapeKind::Square:
            return std::abs(dx) <= r * 0.85 && std::abs(dy) <= r * 0.85;
        case ShapeKind::Triangle:
            return dy >= -r && dy <= r && std::abs(dx) <= (dy + r) * 0.5;
        case ShapeKind::Ring: {
            const double d2 = dx * dx + dy * dy;
            return d2 <= r * r && d2 >= (0.5 * r) * (0.5 * r);
        }
        case ShapeKind::Cross:
            return (std::abs(dx) <= r * 0.3 && std::abs(dy) <= r) ||
                   (std::abs(dy) <= r * 0.3 && std::abs(dx) <= r);
        case ShapeKind::Diamond:
            return std::abs(dx) + std::abs(dy) <= r;
        case ShapeKind::Bars: {
            if (std::abs(dx) > r || std::abs(dy) > r) return false;
            const double phase = (dy + r + t.angle * r) / (0.5 * r);
            return std::fmod(phase, 2.0) < 1.0;
        }
        case ShapeKind::Checker: {
            if (std::abs(dx) > r || std::abs(dy) > r) return false;
            const int ix = static_cast<int>(std::floor((dx + r) / (0.5 * r)));
            const int iy = static_cast<int>(std::floor((dy + r) / (0.5 * r)));
            return (ix + iy) % 2 == 0;
        }
        default:
            return false;
    }
}

Image render_sample(const ClassTemplate& t, std::size_t size, double noise_level,
                    RandomStream& stream) {
    Image img(size, size, 3);

    // every within-class variation is gated by noise_level so that level 0
    // renders the bare template
    // Within-class variation is mostly structural (placement, scale, color,
    // background) with only mild iid pixel noise: structured variation keeps
    // individual samples hard to memorize without blurring class boundaries.
    ClassTemplate placed = t;
    float bg = 0.15f;
    float fg[3] = {t.color.r, t.color.g, t.color.b};
    if (noise_level > 0.0) {
        const double amp = noise_level * 10.0 * (static_cast<double>(size) / 32.0);
        placed.cx += stream.uniform(-amp, amp) / static_cast<double>(size);
        placed.cy += stream.uniform(-amp, amp) / static_cast<double>(size);
        placed.radius *= 1.0 + stream.uniform(-1.0, 1.0) * noise_level;
        bg = static_cast<float>(0.15 + stream.uniform(-0.5, 0.5) * noise_level);
        for (float& c : fg)
            c = clamp01(c * static_cast<float>(1.0 + stream.uniform(-0.6, 0.6) * noise_level));
    }

    for (std::size_t y = 0; y < size; ++y) {
        const double ny = (static_cast<double>(y) + 0.5) / static_cast<double>(size);
        for (std::size_t x = 0; x < size; ++x) {
            const double nx = (static_cast<double>(x) + 0.5) / static_cast<double>(size);
            const bool in = inside_shape(placed, nx, ny);
            for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = in ? fg[c] : bg;
        }
    }

    if (noise_level > 0.0) {
        const double pixel_amp = 0.25 * noise_level;
        for (float& px : img.pixels) {
            px = clamp01(px + static_cast<float>(stream.uniform(-pixel_amp, pixel_amp)));
        }
    }
    return img;
}

} // namespace

Dataset generate(std::size_t num_classes, std::size_t per_class, std::size_t image_size,
                 double noise_level, RandomStream& stream) {
    if (num_classes < 2) throw ConfigError("generate: num_classes must be >= 2");
    if (per_class < 2) throw ConfigError("generate: per_class must be >= 2");
    if (image_size < 16) throw ConfigError("generate: image_size must be >= 16 to render templates");
    if (noise_level < 0.0 || noise_level > 0.5)
        throw ConfigError("generate: noise_level must be in [0, 0.5]");

    Dataset d;
    d.num_classes = num_classes;
    d.split = Split::Train;
    d.seed = stream.seed();
    d.samples.reserve(num_classes * per_class);

    std::size_t origin = 0;
    for (std::size_t y = 0; y < num_classes; ++y) {
        const ClassTemplate t = class_template(y);
        for (std::size_t k = 0; k < per_class; ++k) {
            LabeledSample s;
            s.image = render_sample(t, image_size, noise_level, stream);
            s.label = y;
            s.origin = origin++;
            d.samples.push_back(std::move(s));
        }
    }
    return d;
}

SplitResult split_dataset(const Dataset& d, double val_fraction,
                          std::size_t sample_per_class, RandomStream& stream) {
    if (val_fraction <= 0.0 || val_fraction >= 1.0)
        throw ConfigError("split: val_fraction must be in (0, 1)");

    SplitResult out;
    out.train.num_classes = out.validation.num_classes = out.sample.num_classes = d.num_classes;
    out.train.seed = out.validation.seed = out.sample.seed = d.seed;
    out.train.split = Split::Train;
    out.validation.split = Split::Validation;
    out.sample.split = Split::SurrogateSample;

    for (std::size_t y = 0; y < d.num_classes; ++y) {
        std::vector<std::size_t> idx = d.indices_of_class(y);
        stream.shuffle(idx);
        const std::size_t val_count =
            static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(idx.size())));
        const std::size_t train_count = idx.size() - val_count;
        if (train_count < sample_per_class)
            throw ConfigError("split: class " + std::to_string(y) + " has only " +
                              std::to_string(train_count) + " train samples, need " +
                              std::to_string(sample_per_class) + " for the sample set");
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const LabeledSample& s = d.samples[idx[i]];
            if (i < train_count)
                out.train.samples.push_back(s);
            else
                out.validation.samples.push_back(s);
        }
        for (std::size_t i = 0; i < sample_per_class; ++i)
            out.sample.samples.push_back(d.samples[idx[i]]);
    }
    return out;
}

namespace {

std::string sample_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sample_%06zu.bin", index);
    return buf;
}

std::map<std::string, std::string> parse_header(const std::string& text) {
    std::map<std::string, std::string> kv;
    for (const std::string& line : split(text, '\n')) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("header: malformed line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

} // namespace

void store(const Dataset& d, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    std::size_t h = 0, w = 0, c = 0;
    if (!d.samples.empty()) {
        h = d.samples[0].image.height;
        w = d.samples[0].image.width;
        c = d.samples[0].image.channels;
    }

    std::string header;
    header += "height=" + std::to_string(h) + "\n";
    header += "width=" + std::to_string(w) + "\n";
    header += "channels=" + std::to_string(c) + "\n";
    header += "num_classes=" + std::to_string(d.num_classes) + "\n";
    header += "split=" + split_name(d.split) + "\n";
    header += "seed=" + std::to_string(d.seed) + "\n";
    header += "count=" + std::to_string(d.samples.size()) + "\n";
    write_text_file(dir / "header.txt", header);

    CsvTable manifest;
    manifest.header = {"file", "label", "origin", "poisoned"};
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const LabeledSample& s = d.samples[i];
        if (!s.image.same_shape(d.samples[0].image))
            throw FormatError("store: sample " + std::to_string(i) + " shape differs from header");
        const std::string file = sample_file_name(i);
        manifest.rows.push_back({file, std::to_string(s.label), std::to_string(s.origin),
                                 s.poisoned ? "1" : "0"});
        write_binary_file(dir / file, s.image.pixels.data(),
                          s.image.pixels.size() * sizeof(float));
    }
    write_text_file(dir / "manifest.csv", to_csv(manifest));
}

Dataset load(const std::filesystem::path& dir) {
    const auto kv = parse_header(read_text_file(dir / "header.txt"));
    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw FormatError(std::string("header: missing key ") + key);
        return it->second;
    };

    Dataset d;
    const std::size_t h = std::stoull(need("height"));
    const std::size_t w = std::stoull(need("width"));
    const std::size_t c = std::stoull(need("channels"));
    d.num_classes = std::stoull(need("num_classes"));
    d.split = split_from_name(need("split"));
    d.seed = std::stoull(need("seed"));
    const std::size_t count = std::stoull(need("count"));

    const CsvTable manifest = parse_csv(read_text_file(dir / "manifest.csv"));
    if (manifest.header != std::vector<std::string>{"file", "label", "origin", "poisoned"})
        throw FormatError("manifest: unexpected header row");
    if (manifest.rows.size() != count)
        throw FormatError("manifest: row count " + std::to_string(manifest.rows.size()) +
                          " does not match header count " + std::to_string(count));

    d.samples.reserve(count);
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        const auto& row = manifest.rows[i];
        if (row.size() != 4)
            throw FormatError("manifest row " + std::to_string(i + 1) + ": expected 4 fields");
        LabeledSample s;
        s.label = std::stoull(row[1]);
        if (s.label >= d.num_classes)
            throw FormatError("manifest row " + std::to_string(i + 1) + ": label " + row[1] +
                              " >= num_classes " + std::to_string(d.num_classes));
        s.origin = std::stoull(row[2]);
        if (row[3] != "0" && row[3] != "1")
            throw FormatError("manifest row " + std::to_string(i + 1) + ": poisoned flag must be 0 or 1");
        s.poisoned = row[3] == "1";

        const auto bytes = read_binary_file(dir / row[0]);
        if (bytes.size() != h * w * c * sizeof(float))
            throw FormatError("manifest row " + std::to_string(i + 1) + ": " + row[0] +
                              " has wrong size for " + std::to_string(h) + "x" +
                              std::to_string(w) + "x" + std::to_string(c));
        s.image = Image(h, w, c);
        std::memcpy(s.image.pixels.data(), bytes.data(), bytes.size());
        d.samples.push_back(std::move(s));
    }
    return d;
}

} // namespace poisonlab
