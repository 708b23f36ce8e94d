#include "evgaze/common.hpp"
#include "evgaze/nn.hpp"

#include <json.hpp>

#include <bit>
#include <filesystem>
#include <fstream>

namespace evgaze {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json shape_fields(const LayerSpec& l) {
    json j;
    j["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d:
        j["in_channels"] = l.in_channels;
        j["out_channels"] = l.out_channels;
        j["kernel"] = {l.kh, l.kw};
        j["stride"] = {l.sh, l.sw};
        j["padding"] = {l.ph, l.pw};
        break;
    case LayerKind::pointwise_conv2d:
    case LayerKind::fully_connected:
        j["in_channels"] = l.in_channels;
        j["out_channels"] = l.out_channels;
        break;
    case LayerKind::batchnorm:
        j["in_channels"] = l.in_channels;
        break;
    case LayerKind::relu:
    case LayerKind::global_avg_pool:
        break;
    case LayerKind::avg_pool2d:
        j["kernel"] = {l.kh, l.kw};
        j["stride"] = {l.sh, l.sw};
        break;
    case LayerKind::temporal_causal_conv:
        j["in_channels"] = l.in_channels;
        j["out_channels"] = l.out_channels;
        j["kernel_t"] = l.k_t;
        break;
    case LayerKind::gru:
        j["in_channels"] = l.in_channels;
        j["out_channels"] = l.out_channels;
        break;
    case LayerKind::ltv_ssm:
        j["in_channels"] = l.in_channels;
        j["state_size"] = l.state_size;
        break;
    }
    return j;
}

void read_shape_fields(const json& j, LayerSpec& l) {
    auto geti = [&](const char* key, int def) {
        return j.contains(key) ? j.at(key).get<int>() : def;
    };
    l.in_channels = geti("in_channels", 0);
    l.out_channels = geti("out_channels", 0);
    l.k_t = geti("kernel_t", 0);
    l.state_size = geti("state_size", 0);
    if (j.contains("kernel")) {
        l.kh = j.at("kernel").at(0).get<int>();
        l.kw = j.at("kernel").at(1).get<int>();
    }
    if (j.contains("stride")) {
        l.sh = j.at("stride").at(0).get<int>();
        l.sw = j.at("stride").at(1).get<int>();
    }
    if (j.contains("padding")) {
        l.ph = j.at("padding").at(0).get<int>();
        l.pw = j.at("padding").at(1).get<int>();
    }
}

} // namespace

void save_model(const ModelSpec& model, const std::string& manifest_path,
                const std::string& blob_name) {
    chain_check(model);
    static_assert(std::endian::native == std::endian::little,
                  "weights blob writer assumes a little-endian host");

    const fs::path mpath(manifest_path);
    const fs::path bpath = mpath.parent_path() / blob_name;
    std::ofstream blob(bpath, std::ios::binary);
    if (!blob)
        throw io_error("cannot open for writing: " + bpath.string());

    json manifest;
    manifest["format"] = "evgaze-weights";
    manifest["version"] = 1;
    manifest["input"] = {model.input[0], model.input[1], model.input[2]};
    if (model.head.kind == HeadSpec::Kind::grid)
        manifest["head"] = {{"kind", "grid"}, {"rows", model.head.rows},
                            {"cols", model.head.cols}};
    else
        manifest["head"] = {{"kind", "none"}};
    manifest["blob"] = blob_name;

    std::uint64_t offset = 0;
    json layers = json::array();
    for (const LayerSpec& l : model.layers) {
        json jl = shape_fields(l);
        json tensors = json::array();
        for (const std::string& name : layer_param_names(l.kind)) {
            const FrameTensor& t = l.param(name);
            json jt;
            jt["name"] = name;
            jt["dims"] = t.dims();
            jt["offset"] = offset;
            tensors.push_back(jt);
            std::vector<float> buf(t.size());
            for (std::size_t i = 0; i < t.size(); ++i)
                buf[i] = static_cast<float>(t[i]);
            blob.write(reinterpret_cast<const char*>(buf.data()),
                       static_cast<std::streamsize>(buf.size() * sizeof(float)));
            offset += buf.size() * sizeof(float);
        }
        jl["tensors"] = tensors;
        layers.push_back(jl);
    }
    manifest["layers"] = layers;
    if (!blob)
        throw io_error("failed writing weights blob");

    std::ofstream mf(mpath, std::ios::binary);
    if (!mf)
        throw io_error("cannot open for writing: " + manifest_path);
    mf << manifest.dump(2) << '\n';
    if (!mf)
        throw io_error("failed writing weights manifest");
}

ModelSpec load_model(const std::string& manifest_path) {
    std::ifstream mf(manifest_path, std::ios::binary);
    if (!mf)
        throw io_error("cannot open: " + manifest_path);
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw io_error("bad weights manifest: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "evgaze-weights" ||
        manifest.value("version", 0) != 1)
        throw io_error("unsupported weights manifest format/version");

    const fs::path bpath =
        fs::path(manifest_path).parent_path() / manifest.at("blob").get<std::string>();
    std::ifstream blob(bpath, std::ios::binary);
    if (!blob)
        throw io_error("cannot open weights blob: " + bpath.string());

    ModelSpec model;
    const auto& in = manifest.at("input");
    model.input = {in.at(0).get<std::size_t>(), in.at(1).get<std::size_t>(),
                   in.at(2).get<std::size_t>()};
    const auto& head = manifest.at("head");
    if (head.at("kind").get<std::string>() == "grid") {
        model.head.kind = HeadSpec::Kind::grid;
        model.head.rows = head.at("rows").get<int>();
        model.head.cols = head.at("cols").get<int>();
    }

    for (const auto& jl : manifest.at("layers")) {
        LayerSpec l;
        l.kind = layer_kind_from_name(jl.at("kind").get<std::string>());
        read_shape_fields(jl, l);
        const std::vector<std::string> expected = layer_param_names(l.kind);
        const auto& tensors = jl.at("tensors");
        if (tensors.size() != expected.size())
            throw io_error("manifest tensor list does not match layer kind");
        for (std::size_t ti = 0; ti < expected.size(); ++ti) {
            const auto& jt = tensors[ti];
            if (jt.at("name").get<std::string>() != expected[ti])
                throw io_error("manifest tensor order must be canonical; expected '" +
                               expected[ti] + "'");
            FrameTensor t(jt.at("dims").get<std::vector<std::size_t>>());
            blob.seekg(static_cast<std::streamoff>(jt.at("offset").get<std::uint64_t>()));
            std::vector<float> buf(t.size());
            blob.read(reinterpret_cast<char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size() * sizeof(float)));
            if (!blob)
                throw io_error("weights blob truncated while reading '" + expected[ti] +
                               "'");
            for (std::size_t i = 0; i < t.size(); ++i)
                t[i] = static_cast<double>(buf[i]);
            l.params.emplace(expected[ti], std::move(t));
        }
        model.layers.push_back(std::move(l));
    }
    chain_check(model); // reject weights inconsistent with declared shapes
    return model;
}

} // namespace evgaze
