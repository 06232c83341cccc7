#include "devrec/bundle.hpp"

#include <cstring>
#include <fstream>

#include "devrec/serialize.hpp"

namespace devrec {

namespace {

constexpr char kMagic[8] = {'D', 'S', 'R', 'E', 'C', 'B', 'N', 'D'};
constexpr std::uint32_t kVersion = 1;

void write_records(std::ostream& out, const std::vector<ReviewRecord>& rs) {
    io::write_u64(out, rs.size());
    for (const ReviewRecord& r : rs) {
        io::write_str(out, r.device_id);
        io::write_str(out, r.service_id);
        io::write_f64(out, r.rating);
        io::write_str(out, r.review_text);
        io::write_u64(out, static_cast<std::uint64_t>(r.timestamp));
    }
}

std::vector<ReviewRecord> read_records(std::istream& in) {
    std::vector<ReviewRecord> rs(io::read_u64(in));
    for (ReviewRecord& r : rs) {
        r.device_id = io::read_str(in);
        r.service_id = io::read_str(in);
        r.rating = io::read_f64(in);
        r.review_text = io::read_str(in);
        r.timestamp = static_cast<std::int64_t>(io::read_u64(in));
    }
    return rs;
}

} // namespace

void save_bundle(const DataBundle& bundle, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_bundle: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    io::write_u32(out, kVersion);
    io::write_u64(out, bundle.seed);
    for (double r : bundle.split.ratios) io::write_f64(out, r);
    io::write_u64(out, bundle.vocab.size());
    for (const std::string& w : bundle.vocab.words()) io::write_str(out, w);
    write_records(out, bundle.split.train);
    write_records(out, bundle.split.validation);
    write_records(out, bundle.split.test);
    if (!out) throw std::runtime_error("save_bundle: write failed for " + path);
}

DataBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_bundle: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_bundle: bad magic in " + path);
    if (io::read_u32(in) != kVersion)
        throw std::runtime_error("load_bundle: unsupported version in " + path);
    DataBundle b;
    b.seed = io::read_u64(in);
    b.split.seed = b.seed;
    for (double& r : b.split.ratios) r = io::read_f64(in);
    const std::uint64_t n_words = io::read_u64(in);
    if (n_words < 2) throw std::runtime_error("load_bundle: vocabulary too small");
    for (std::uint64_t i = 0; i < n_words; ++i) {
        const std::string w = io::read_str(in);
        if (i >= 2) b.vocab.add(w); // pad and oov are implicit
    }
    b.split.train = read_records(in);
    b.split.validation = read_records(in);
    b.split.test = read_records(in);
    return b;
}

std::pair<CollectionMap, CollectionMap> build_leakage_collections(const DataBundle& bundle,
                                                                  std::size_t t_max) {
    std::vector<ReviewRecord> all = bundle.split.train;
    all.insert(all.end(), bundle.split.validation.begin(), bundle.split.validation.end());
    all.insert(all.end(), bundle.split.test.begin(), bundle.split.test.end());
    std::vector<PairKey> exclude;
    for (const auto* part : {&bundle.split.validation, &bundle.split.test})
        for (const ReviewRecord& r : *part) exclude.push_back({r.device_id, r.service_id});
    return build_collections(all, bundle.vocab, t_max, exclude);
}

} // namespace devrec
