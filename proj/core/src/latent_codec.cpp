#include "poisonlab/latent_codec.hpp"

#include "poisonlab/csv.hpp"
#include "poisonlab/errors.hpp"
#include "poisonlab/random.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace poisonlab {

LdaProjection fit_lda(const Matrix& latents, const std::vector<std::size_t>& labels,
                      std::size_t n) {
    if (latents.rows != labels.size())
        throw DimensionError("fit_lda: latent rows and labels differ in count");
    if (latents.rows == 0) throw InputError("fit_lda: no rows");
    const std::size_t d = latents.cols;
    if (n == 0) throw ConfigError("fit_lda: n must be positive");
    if (n > d) throw ConfigError("fit_lda: n exceeds latent dimensionality");

    std::map<std::size_t, std::size_t> counts;
    for (std::size_t label : labels) ++counts[label];
    if (counts.size() < 2) throw InputError("fit_lda: need at least 2 classes present");
    for (const auto& [label, count] : counts)
        if (count < 2)
            throw InputError("fit_lda: class " + std::to_string(label) +
                             " has fewer than 2 rows");

    // class means and grand mean
    std::map<std::size_t, std::vector<double>> mean;
    for (const auto& [label, count] : counts) mean[label].assign(d, 0.0);
    std::vector<double> grand(d, 0.0);
    for (std::size_t i = 0; i < latents.rows; ++i) {
        const double* row = &latents.data[i * d];
        auto& mu = mean[labels[i]];
        for (std::size_t j = 0; j < d; ++j) {
            mu[j] += row[j];
            grand[j] += row[j];
        }
    }
    for (auto& [label, mu] : mean) {
        const double inv = 1.0 / static_cast<double>(counts[label]);
        for (double& v : mu) v *= inv;
    }
    const double inv_total = 1.0 / static_cast<double>(latents.rows);
    for (double& v : grand) v *= inv_total;

    Matrix s_w(d, d);
    Matrix s_b(d, d);
    for (std::size_t i = 0; i < latents.rows; ++i) {
        const double* row = &latents.data[i * d];
        const auto& mu = mean[labels[i]];
        for (std::size_t a = 0; a < d; ++a) {
            const double da = row[a] - mu[a];
            if (da == 0.0) continue;
            for (std::size_t b = 0; b < d; ++b) s_w.at(a, b) += da * (row[b] - mu[b]);
        }
    }
    for (const auto& [label, mu] : mean) {
        const double weight = static_cast<double>(counts[label]);
        for (std::size_t a = 0; a < d; ++a) {
            const double da = mu[a] - grand[a];
            for (std::size_t b = 0; b < d; ++b)
                s_b.at(a, b) += weight * da * (mu[b] - grand[b]);
        }
    }

    LdaProjection p;
    p.n = n;
    p.usable = std::min(n, counts.size() - 1);
    const Matrix dirs =
        generalized_eig_directions(s_b, s_w, p.usable, default_ridge(s_w));
    p.directions = Matrix(d, n); // columns beyond usable stay zero
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < p.usable; ++j) p.directions.at(i, j) = dirs.at(i, j);

    std::uint64_t h = fnv1a(latents.data.data(), latents.data.size() * sizeof(double));
    h = fnv1a(labels.data(), labels.size() * sizeof(std::size_t), h);
    p.fingerprint = h;
    return p;
}

Matrix project(const LdaProjection& p, const Matrix& latents) {
    if (latents.cols != p.directions.rows)
        throw DimensionError("project: latent width " + std::to_string(latents.cols) +
                             " does not match projection input " +
                             std::to_string(p.directions.rows));
    return multiply(latents, p.directions);
}

ClassMeans class_means(const Matrix& compressed, const std::vector<std::size_t>& labels,
                       std::size_t num_classes) {
    if (compressed.rows != labels.size())
        throw DimensionError("class_means: rows and labels differ in count");
    if (num_classes == 0) throw InputError("class_means: num_classes must be positive");

    const std::size_t n = compressed.cols;
    Matrix sums(num_classes, n);
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t i = 0; i < compressed.rows; ++i) {
        if (labels[i] >= num_classes)
            throw InputError("class_means: label " + std::to_string(labels[i]) +
                             " out of range");
        ++counts[labels[i]];
        for (std::size_t j = 0; j < n; ++j)
            sums.at(labels[i], j) += compressed.at(i, j);
    }
    for (std::size_t y = 0; y < num_classes; ++y)
        if (counts[y] == 0)
            throw InputError("class_means: class " + std::to_string(y) + " is absent");

    ClassMeans out;
    out.means = Matrix(num_classes, n);
    out.centroid.assign(n, 0.0);
    for (std::size_t y = 0; y < num_classes; ++y) {
        const double inv = 1.0 / static_cast<double>(counts[y]);
        for (std::size_t j = 0; j < n; ++j) {
            const double my = sums.at(y, j) * inv;
            out.means.at(y, j) = my;
            out.centroid[j] += my;
        }
    }
    // centroid is the unweighted mean over class means, not the grand mean
    const double inv_classes = 1.0 / static_cast<double>(num_classes);
    for (double& v : out.centroid) v *= inv_classes;
    return out;
}

ClassEncodingTable encode_latent(const ClassMeans& m) {
    ClassEncodingTable t;
    const std::size_t n = m.centroid.size();
    t.bits.reserve(m.means.rows);
    for (std::size_t y = 0; y < m.means.rows; ++y) {
        std::string bits(n, '0');
        for (std::size_t i = 0; i < n; ++i)
            if (m.means.at(y, i) - m.centroid[i] > 0.0) bits[i] = '1';
        t.bits.push_back(std::move(bits));
    }
    return t;
}

std::vector<std::vector<std::size_t>> encoding_collisions(const ClassEncodingTable& t) {
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::string, std::size_t> seen; // bits -> group index or first class
    std::map<std::string, std::size_t> first_class;
    for (std::size_t y = 0; y < t.bits.size(); ++y) {
        const std::string& key = t.bits[y];
        auto it = first_class.find(key);
        if (it == first_class.end()) {
            first_class[key] = y;
            continue;
        }
        auto git = seen.find(key);
        if (git == seen.end()) {
            groups.push_back({it->second, y});
            seen[key] = groups.size() - 1;
        } else {
            groups[git->second].push_back(y);
        }
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return groups;
}

std::string encoding_table_to_csv(const ClassEncodingTable& t) {
    CsvTable csv;
    csv.header = {"class", "bits"};
    for (std::size_t y = 0; y < t.bits.size(); ++y)
        csv.rows.push_back({std::to_string(y), t.bits[y]});
    return to_csv(csv);
}

ClassEncodingTable encoding_table_from_csv(const std::string& text) {
    const CsvTable csv = parse_csv(text);
    if (csv.header != std::vector<std::string>{"class", "bits"})
        throw FormatError("encoding table: unexpected header");
    ClassEncodingTable t;
    t.bits.resize(csv.rows.size());
    for (const auto& row : csv.rows) {
        if (row.size() != 2) throw FormatError("encoding table: expected 2 fields per row");
        const std::size_t y = std::stoull(row[0]);
        if (y >= t.bits.size()) throw FormatError("encoding table: class id out of range");
        for (char c : row[1])
            if (c != '0' && c != '1') throw FormatError("encoding table: bits must be 0/1");
        t.bits[y] = row[1];
    }
    for (const std::string& b : t.bits)
        if (b.size() != t.bits.front().size())
            throw FormatError("encoding table: inconsistent bit lengths");
    return t;
}

} // namespace poisonlab
