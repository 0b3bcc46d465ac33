#pragma once

#include <memory>
#include <ostream>
#include <vector>

#include "rkform/expr.hpp"
#include "rkform/form.hpp"
#include "rkform/quadrature.hpp"
#include "rkform/sparse.hpp"

namespace rkform {

/// Uniform mesh of [a, b] with N cells.
class Mesh1D {
 public:
  Mesh1D(double a, double b, int cells, bool periodic = false);

  double a() const { return a_; }
  double b() const { return b_; }
  int num_cells() const { return n_; }
  bool periodic() const { return periodic_; }
  double h() const { return (b_ - a_) / n_; }
  double vertex(int i) const { return a_ + i * h(); }
  double length() const { return b_ - a_; }

  bool operator==(const Mesh1D&) const = default;

 private:
  double a_;
  double b_;
  int n_;
  bool periodic_;
};

enum class Family { CG, DG };

inline constexpr int kMaxDegree = 4;

/// Nodal Lagrange space on equispaced points per cell (the midpoint for DG0).
class FunctionSpace {
 public:
  FunctionSpace(Mesh1D mesh, Family family, int degree);

  const Mesh1D& mesh() const { return mesh_; }
  Family family() const { return family_; }
  int degree() const { return degree_; }
  int dofs_per_cell() const { return degree_ + 1; }
  int dof_count() const { return dof_count_; }

  /// Global dof of local node `j` in `cell`.
  int dof(int cell, int j) const;
  const std::vector<double>& dof_coordinates() const { return coords_; }

  /// Reference nodes in [0, 1].
  const std::vector<double>& reference_nodes() const { return nodes_; }
  /// Basis function j and its reference derivative at xi in [0, 1].
  double basis(int j, double xi) const;
  double basis_derivative(int j, double xi) const;

  /// Dof sitting on the given end of the interval. Throws InvalidArgument on
  /// periodic meshes.
  int boundary_dof(BoundaryLocation location) const;

 private:
  Mesh1D mesh_;
  Family family_;
  int degree_;
  int dof_count_;
  std::vector<double> nodes_;
  std::vector<double> coords_;
};

using SpacePtr = std::shared_ptr<const FunctionSpace>;

/// A discrete function: space plus coefficient vector.
struct FieldFunction {
  FieldFunction(SpacePtr space, Vector coefficients);
  explicit FieldFunction(SpacePtr space);

  SpacePtr space;
  Vector coefficients;
};

/// Stage-major global numbering for `num_stages` copies of a product of
/// field spaces: index(f, i, dof) = i * block_size + offset(f) + dof.
class BlockLayout {
 public:
  BlockLayout(std::vector<SpacePtr> spaces, int num_stages = 1);

  int num_fields() const { return static_cast<int>(spaces_.size()); }
  int num_stages() const { return stages_; }
  int block_size() const { return block_; }
  int size() const { return stages_ * block_; }
  int offset(int field) const { return offsets_[field]; }
  int index(int field, int stage, int dof) const {
    return stage * block_ + offsets_[field] + dof;
  }
  const FunctionSpace& space(int field) const { return *spaces_[field]; }
  const std::vector<SpacePtr>& spaces() const { return spaces_; }
  const Mesh1D& mesh() const { return spaces_.front()->mesh(); }
  int max_degree() const;

  /// The same spaces with a different stage count.
  BlockLayout with_stages(int num_stages) const { return BlockLayout(spaces_, num_stages); }

 private:
  std::vector<SpacePtr> spaces_;
  std::vector<int> offsets_;
  int stages_;
  int block_{0};
};

/// Number of Gauss points per cell used for assembly with polynomial degree k.
int assembly_quadrature_points(int degree);

/// Coefficient data bound to the unknown references of a form. `fields` and
/// `rates` hold all fields concatenated (length block_size); `stages` is
/// stage-major (length num_stages * block_size).
struct AssemblyState {
  const Vector* fields{nullptr};
  const Vector* rates{nullptr};
  const Vector* stages{nullptr};
  double time{0.0};
};

/// A form prepared for repeated assembly over a fixed layout.
class CompiledForm {
 public:
  CompiledForm(const Form& form, BlockLayout layout);
  ~CompiledForm();
  CompiledForm(CompiledForm&&) noexcept;
  CompiledForm& operator=(CompiledForm&&) noexcept;

  const BlockLayout& layout() const;
  /// True when every term is also linear in trial references.
  bool is_bilinear() const;

  /// Form tested against every test basis function. Rows follow the layout.
  Vector residual(const AssemblyState& state) const;
  /// Bilinear form (trial x test) as a layout.size() square matrix. Throws
  /// InvalidArgument if a term is not linear in the trial references.
  SparseMatrix matrix(const AssemblyState& state) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Vector assemble_residual(const Form& form, const BlockLayout& layout, const AssemblyState& state);
SparseMatrix assemble_matrix(const Form& form, const BlockLayout& layout,
                             const AssemblyState& state = {});

/// Integral over the mesh of an integrand free of test references.
double assemble_functional(const Expr& integrand, const BlockLayout& layout,
                           const AssemblyState& state);

/// Nodal interpolant of an expression in x (and t).
FieldFunction interpolate(const Expr& e, SpacePtr space, double time = 0.0);

enum class Norm { L2, H1 };

/// ||u_exact - u_h|| in L2 or the full H1 norm, with twice the assembly
/// quadrature.
double errornorm(const Expr& u_exact, const FieldFunction& u_h, Norm norm, double time = 0.0);

/// ||u_exact|| in the same norm and quadrature as errornorm.
double exact_norm(const Expr& u_exact, const Mesh1D& mesh, int degree, Norm norm,
                  double time = 0.0);

/// Two-column CSV (x,value) at the dof coordinates, ordered by dof.
void write_field_csv(std::ostream& os, const FieldFunction& u);

}  // namespace rkform
