#include "spheregc/error.hpp"
#include "spheregc/evalkit.hpp"
#include "spheregc/maxflow.hpp"
#include "spheregc/segmenter.hpp"
#include "spheregc/service.hpp"
#include "spheregc/spheremesh.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace spheregc;

namespace {

// Arrays on the Python side are indexed [k, j, i] (z slowest), matching the
// x-fastest storage order.
Geometry geometry_for(const py::buffer_info& info, const std::array<double, 3>& spacing,
                      const std::array<double, 3>& origin) {
    if (info.ndim != 3) {
        throw InvalidArgument("expected a 3-D array indexed [z, y, x]");
    }
    Geometry g;
    g.dims = {static_cast<int>(info.shape[2]), static_cast<int>(info.shape[1]),
              static_cast<int>(info.shape[0])};
    g.spacing = spacing;
    g.origin = origin;
    g.validate();
    return g;
}

std::vector<py::ssize_t> shape_of(const Geometry& g) { return {g.dims[2], g.dims[1], g.dims[0]}; }

Volume3D volume_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> a,
                           const std::array<double, 3>& spacing, const std::array<double, 3>& origin) {
    const auto info = a.request();
    const Geometry g = geometry_for(info, spacing, origin);
    const auto* p = static_cast<const float*>(info.ptr);
    return Volume3D(g, std::vector<float>(p, p + g.voxel_count()));
}

Mask3D mask_from_array(py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a,
                       const std::array<double, 3>& spacing, const std::array<double, 3>& origin) {
    const auto info = a.request();
    const Geometry g = geometry_for(info, spacing, origin);
    const auto* p = static_cast<const std::uint8_t*>(info.ptr);
    std::vector<std::uint8_t> data(g.voxel_count());
    for (std::size_t n = 0; n < data.size(); ++n) {
        data[n] = p[n] ? 1 : 0;
    }
    return Mask3D(g, std::move(data));
}

template <typename T>
py::array_t<T> to_array(const Geometry& g, std::span<const T> data) {
    py::array_t<T> out(shape_of(g));
    std::copy(data.begin(), data.end(), out.mutable_data());
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Seeded spherical graph-cut segmentation";

    py::register_exception<SeedOutOfBounds>(m, "SeedOutOfBounds", PyExc_ValueError);
    py::register_exception<GeometryMismatch>(m, "GeometryMismatch", PyExc_ValueError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

    py::class_<Geometry>(m, "Geometry")
        .def_readonly("dims", &Geometry::dims)
        .def_readonly("spacing", &Geometry::spacing)
        .def_readonly("origin", &Geometry::origin)
        .def("voxel_to_world", [](const Geometry& g, int i, int j, int k) {
            return g.voxel_to_world(i, j, k).to_array();
        });

    py::class_<Volume3D>(m, "Volume")
        .def(py::init(&volume_from_array), py::arg("array"),
             py::arg("spacing") = std::array<double, 3>{1, 1, 1},
             py::arg("origin") = std::array<double, 3>{0, 0, 0})
        .def_property_readonly("geometry", &Volume3D::geometry)
        .def_property_readonly("dims", &Volume3D::dims)
        .def("to_numpy", [](const Volume3D& v) { return to_array<float>(v.geometry(), v.data()); })
        .def("intensity_range", &Volume3D::intensity_range);

    py::class_<Mask3D>(m, "Mask")
        .def(py::init(&mask_from_array), py::arg("array"),
             py::arg("spacing") = std::array<double, 3>{1, 1, 1},
             py::arg("origin") = std::array<double, 3>{0, 0, 0})
        .def_property_readonly("geometry", &Mask3D::geometry)
        .def_property_readonly("dims", &Mask3D::dims)
        .def("count", &Mask3D::count)
        .def("to_numpy", [](const Mask3D& mk) { return to_array<std::uint8_t>(mk.geometry(), mk.data()); })
        .def("__eq__", [](const Mask3D& a, const Mask3D& b) { return a == b; });

    m.def("load_volume", &load_volume, py::arg("path"));
    m.def("load_mask", &load_mask, py::arg("path"));
    m.def("save_volume", [](const Volume3D& v, const std::filesystem::path& p) { save_volume(v, p); },
          py::arg("volume"), py::arg("path"));
    m.def("save_mask", &save_mask, py::arg("mask"), py::arg("path"));

    py::class_<IcoMesh>(m, "IcoMesh")
        .def_property_readonly("level", &IcoMesh::level)
        .def_property_readonly("vertices", [](const IcoMesh& mesh) {
            std::vector<std::array<double, 3>> out;
            for (const Vec3& v : mesh.vertices()) {
                out.push_back(v.to_array());
            }
            return out;
        })
        .def_property_readonly("faces", [](const IcoMesh& mesh) { return mesh.faces(); })
        .def("vertex_count", &IcoMesh::vertex_count)
        .def("face_count", &IcoMesh::face_count);
    m.def("mesh_at_level", &mesh_at_level, py::arg("level"));
    m.def("vertex_adjacency", &vertex_adjacency, py::arg("mesh"));

    m.def(
        "make_phantom",
        [](const std::string& shape, std::array<double, 3> semi_axes, std::array<int, 3> dims,
           std::array<double, 3> spacing, double object, double background, double noise_sigma,
           std::uint64_t rng_seed) {
            PhantomSpec spec;
            spec.shape = phantom_shape_from_name(shape);
            spec.semi_axes_mm = semi_axes;
            spec.dims = dims;
            spec.spacing = spacing;
            spec.object_intensity = object;
            spec.background_intensity = background;
            spec.noise_sigma = noise_sigma;
            spec.rng_seed = rng_seed;
            Phantom p = make_phantom(spec);
            return py::make_tuple(std::move(p.volume), std::move(p.truth), p.center.to_array());
        },
        py::arg("shape") = "sphere", py::arg("semi_axes") = std::array<double, 3>{20, 20, 20},
        py::arg("dims") = std::array<int, 3>{128, 128, 128},
        py::arg("spacing") = std::array<double, 3>{1, 1, 1}, py::arg("object") = 200.0,
        py::arg("background") = 0.0, py::arg("noise_sigma") = 0.0, py::arg("rng_seed") = 1);

    py::class_<SegmentationResult>(m, "SegmentationResult")
        .def_readonly("mask", &SegmentationResult::mask)
        .def_readonly("boundary_index", &SegmentationResult::boundary_index)
        .def_readonly("boundary_radius_mm", &SegmentationResult::boundary_radius_mm)
        .def_readonly("objective", &SegmentationResult::objective)
        .def_readonly("seed_mean", &SegmentationResult::seed_mean)
        .def_readonly("warnings", &SegmentationResult::warnings)
        .def_property_readonly("total_ms", [](const SegmentationResult& r) { return r.timings.total_ms; })
        .def("report_json", &report_json, py::arg("include_timings") = true);

    m.def(
        "segment",
        [](const Volume3D& vol, std::array<double, 3> seed, int mesh_level, int nodes_per_ray,
           double ray_length_mm, int delta_r, const std::string& cost_model) {
            SegmentationParams p;
            p.mesh_level = mesh_level;
            p.nodes_per_ray = nodes_per_ray;
            p.ray_length_mm = ray_length_mm;
            p.delta_r = delta_r;
            p.cost_model = cost_model_from_name(cost_model);
            py::gil_scoped_release release;
            return segment(vol, WorldPoint{seed[0], seed[1], seed[2]}, p);
        },
        py::arg("volume"), py::arg("seed_mm"), py::arg("mesh_level") = 5, py::arg("nodes_per_ray") = 50,
        py::arg("ray_length_mm") = 50.0, py::arg("delta_r") = 1, py::arg("cost_model") = "region");

    m.def("dice", &dice, py::arg("a"), py::arg("b"));
    m.def("mask_volume_cm3", &mask_volume_cm3, py::arg("mask"));

    m.def(
        "max_flow",
        [](int nodes, const std::vector<std::tuple<int, int, double>>& arcs,
           const std::vector<double>& source, const std::vector<double>& sink) {
            if (source.size() != static_cast<std::size_t>(nodes) ||
                sink.size() != static_cast<std::size_t>(nodes)) {
                throw InvalidArgument("one source and one sink capacity per node");
            }
            FlowNetwork net(nodes);
            net.source_capacity = source;
            net.sink_capacity = sink;
            for (const auto& [u, v, c] : arcs) {
                if (u < 0 || v < 0 || u >= nodes || v >= nodes) {
                    throw InvalidArgument("arc endpoint out of range");
                }
                net.add_arc(u, v, c);
            }
            const CutResult cut = max_flow(net);
            return py::make_tuple(cut.flow_value, cut.source_side);
        },
        py::arg("nodes"), py::arg("arcs"), py::arg("source"), py::arg("sink"));

    m.def("rle_encode", [](const Mask3D& mk) { return rle_encode(mk.data()); }, py::arg("mask"));
    m.def(
        "rle_decode",
        [](const std::vector<std::uint64_t>& runs, std::size_t length) { return rle_decode(runs, length); },
        py::arg("runs"), py::arg("length"));
}
