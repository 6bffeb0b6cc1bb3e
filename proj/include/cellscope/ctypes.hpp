#pragma once

#include <algorithm>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "abi.hpp"

namespace cellscope {

// Surface types. Records ("struct") lay fields out sequentially with
// padding, overlays ("union") give every field offset 0. Pointers carry their
// pointee for access typing but occupy scalar_type::ptr at the byte level.
struct ctype;

struct cfield {
    std::string name;
    const ctype* type = nullptr;
    uint32_t offset = 0; // filled in by layout
};

struct ctype {
    enum class kind : uint8_t { scalar, pointer, record, overlay, array, func, void_t };
    kind k = kind::void_t;

    scalar_type st = scalar_type::sint; // scalar
    const ctype* pointee = nullptr;     // pointer
    std::string tag;                    // record/overlay (empty when anonymous)
    std::vector<cfield> fields;         // record/overlay
    const ctype* elem = nullptr;        // array
    uint32_t count = 0;                 // array
    const ctype* ret = nullptr;         // func
    std::vector<const ctype*> params;   // func

    bool is_scalar() const { return k == kind::scalar || k == kind::pointer; }
    scalar_type as_scalar() const { return k == kind::pointer ? scalar_type::ptr : st; }
    bool is_aggregate() const { return k == kind::record || k == kind::overlay || k == kind::array; }
};

// Owns every ctype node of one translation unit; layout results are cached on
// the nodes themselves (fields' offsets) and recomputed via size/align calls.
class type_table {
public:
    explicit type_table(const abi& a) : abi_(a) {
        void_ = make(ctype::kind::void_t);
        for (int i = 0; i < kNumScalarTypes; ++i) {
            scalars_[i] = make(ctype::kind::scalar);
            scalars_[i]->st = scalar_type(i);
        }
    }

    const abi& layout_abi() const { return abi_; }

    const ctype* scalar(scalar_type t) { return scalars_[size_t(t)]; }
    const ctype* void_type() const { return void_; }

    const ctype* pointer_to(const ctype* pointee) {
        for (auto& n : nodes_)
            if (n->k == ctype::kind::pointer && n->pointee == pointee) return n.get();
        ctype* p = make(ctype::kind::pointer);
        p->pointee = pointee;
        return p;
    }

    const ctype* array_of(const ctype* elem, uint32_t count) {
        ctype* p = make(ctype::kind::array);
        p->elem = elem;
        p->count = count;
        return p;
    }

    ctype* make_aggregate(ctype::kind k, std::string tag) {
        ctype* p = make(k);
        p->tag = std::move(tag);
        return p;
    }

    ctype* make_func(const ctype* ret, std::vector<const ctype*> params) {
        ctype* p = make(ctype::kind::func);
        p->ret = ret;
        p->params = std::move(params);
        return p;
    }

    // Assigns field offsets and checks the type is instantiable.
    void finalize(ctype* t) {
        if (t->k == ctype::kind::record) {
            uint32_t off = 0;
            for (auto& f : t->fields) {
                uint32_t al = align_of(f.type);
                off = (off + al - 1) / al * al;
                f.offset = off;
                off += size_of(f.type);
            }
        } else if (t->k == ctype::kind::overlay) {
            for (auto& f : t->fields) f.offset = 0;
        }
        size_of(t); // throws on void members etc.
    }

    uint32_t size_of(const ctype* t) const {
        switch (t->k) {
        case ctype::kind::scalar: return abi_.sizeof_(t->st);
        case ctype::kind::pointer: return abi_.sizeof_(scalar_type::ptr);
        case ctype::kind::array: return t->count * size_of(t->elem);
        case ctype::kind::record: {
            uint32_t end = 0, al = align_of(t);
            for (auto& f : t->fields) end = std::max(end, f.offset + size_of(f.type));
            return (end + al - 1) / al * al;
        }
        case ctype::kind::overlay: {
            uint32_t sz = 0, al = align_of(t);
            for (auto& f : t->fields) sz = std::max(sz, size_of(f.type));
            return (sz + al - 1) / al * al;
        }
        case ctype::kind::func:
        case ctype::kind::void_t: throw front_error("type has no size");
        }
        return 0;
    }

    uint32_t align_of(const ctype* t) const {
        switch (t->k) {
        case ctype::kind::scalar: return abi_.alignof_(t->st);
        case ctype::kind::pointer: return abi_.alignof_(scalar_type::ptr);
        case ctype::kind::array: return align_of(t->elem);
        case ctype::kind::record:
        case ctype::kind::overlay: {
            uint32_t al = 1;
            for (auto& f : t->fields) al = std::max(al, align_of(f.type));
            return al;
        }
        case ctype::kind::func:
        case ctype::kind::void_t: throw front_error("type has no alignment");
        }
        return 1;
    }

    const cfield* find_field(const ctype* t, const std::string& name) const {
        if (t->k != ctype::kind::record && t->k != ctype::kind::overlay) return nullptr;
        for (auto& f : t->fields)
            if (f.name == name) return &f;
        return nullptr;
    }

    static std::string name_of(const ctype* t) {
        switch (t->k) {
        case ctype::kind::scalar: return scalar_name(t->st);
        case ctype::kind::pointer: return name_of(t->pointee) + "*";
        case ctype::kind::record: return t->tag.empty() ? "struct <anon>" : "struct " + t->tag;
        case ctype::kind::overlay: return t->tag.empty() ? "union <anon>" : "union " + t->tag;
        case ctype::kind::array: return name_of(t->elem) + "[" + std::to_string(t->count) + "]";
        case ctype::kind::func: return "function";
        case ctype::kind::void_t: return "void";
        }
        return "?";
    }

private:
    ctype* make(ctype::kind k) {
        nodes_.push_back(std::make_unique<ctype>());
        nodes_.back()->k = k;
        return nodes_.back().get();
    }

    abi abi_;
    std::vector<std::unique_ptr<ctype>> nodes_;
    std::array<ctype*, kNumScalarTypes> scalars_{};
    ctype* void_ = nullptr;
};

} // namespace cellscope
