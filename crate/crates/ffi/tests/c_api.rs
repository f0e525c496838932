use std::ffi::CStr;
use std::ptr;

use spanlab_ffi::*;

fn last_error() -> String {
    let p = spl_last_error();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { spl_string_free(p) };
    s
}

fn graph(n: usize, edges: &[(usize, usize)]) -> *mut SplGraph {
    let flat: Vec<usize> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { spl_graph_new(n, flat.as_ptr(), edges.len(), &mut g) }, SplStatus::Ok);
    g
}

#[test]
fn graph_lifecycle() {
    unsafe {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!((spl_graph_vertex_count(g), spl_graph_edge_count(g), spl_graph_min_degree(g)), (4, 4, 2));
        let mut e = false;
        assert_eq!(spl_graph_has_edge(g, 0, 3, &mut e), SplStatus::Ok);
        assert!(e);
        assert_eq!(spl_graph_has_edge(g, 0, 9, &mut e), SplStatus::VertexOutOfRange);
        assert!(last_error().contains("out of range"));
        spl_graph_free(g);
        spl_graph_free(ptr::null_mut());
        assert_eq!(spl_graph_vertex_count(ptr::null()), 0);
    }
}

#[test]
fn errors_carry_messages() {
    unsafe {
        let mut g = ptr::null_mut();
        let self_loop = [1usize, 1];
        assert_eq!(spl_graph_new(3, self_loop.as_ptr(), 1, &mut g), SplStatus::InvalidParameter);
        assert!(g.is_null());
        assert!(last_error().contains("self-loop"));
        assert_eq!(spl_graph_new(3, ptr::null(), 2, &mut g), SplStatus::NullPointer);
        assert_eq!(spl_graph_gnp(10, 1.5, 0, &mut g), SplStatus::InvalidParameter);
        let text = c"3 1\n0 7\n";
        assert_eq!(spl_graph_parse(text.as_ptr(), &mut g), SplStatus::Parse);
        assert!(last_error().contains("line 2"));
    }
}

#[test]
fn parse_and_bandwidth() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(spl_graph_parse(c"p edge 4 3\ne 1 2\ne 2 3\ne 3 4\n".as_ptr(), &mut g), SplStatus::Ok);
        let mut pos = [0usize; 4];
        let mut bw = 0;
        assert_eq!(spl_bandwidth(g, true, pos.as_mut_ptr(), &mut bw), SplStatus::Ok);
        assert_eq!(bw, 1);
        let mut sorted = pos;
        sorted.sort_unstable();
        assert_eq!(sorted, [0, 1, 2, 3]);
        let mut col = [9usize; 4];
        assert_eq!(spl_colour(g, 2, col.as_mut_ptr()), SplStatus::Ok);
        assert!(col.windows(2).all(|w| w[0] != w[1]));
        spl_graph_free(g);
        let big = graph(13, &[]);
        assert_eq!(spl_bandwidth(big, true, pos.as_mut_ptr(), &mut bw), SplStatus::TooLarge);
        spl_graph_free(big);
    }
}

#[test]
fn embedding_round_trip() {
    unsafe {
        let mut gamma = ptr::null_mut();
        assert_eq!(spl_graph_gnp(40, 1.0, 1, &mut gamma), SplStatus::Ok);
        let mut g = ptr::null_mut();
        assert_eq!(spl_graph_thin(gamma, 0.6, 1.0, 2, &mut g), SplStatus::Ok);
        assert!(spl_graph_min_degree(g) >= 24);
        let cycle: Vec<(usize, usize)> = (0..40).map(|i| (i, (i + 1) % 40)).collect();
        let h = graph(40, &cycle);
        let mut e = ptr::null_mut();
        assert_eq!(spl_embed_greedy(h, g, 100_000, 3, &mut e), SplStatus::Ok);
        assert_eq!(spl_embedding_len(e), 40);
        assert!(spl_embedding_verify(h, g, e));
        let mut v = 0;
        assert_eq!(spl_embedding_get(e, 5, &mut v), SplStatus::Ok);
        assert!(v < 40);
        assert_eq!(spl_embedding_get(e, 40, &mut v), SplStatus::VertexOutOfRange);
        spl_embedding_free(e);
        // K_4 does not fit into a cycle
        let k4 = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let mut none = ptr::null_mut();
        assert_eq!(spl_embed_greedy(k4, h, 1000, 0, &mut none), SplStatus::NotFound);
        assert!(none.is_null());
        for x in [gamma, g, h, k4] {
            spl_graph_free(x);
        }
    }
}

#[test]
fn regularity_and_density() {
    unsafe {
        let edges: Vec<(usize, usize)> = (0..4).flat_map(|u| (4..8).map(move |v| (u, v))).collect();
        let g = graph(8, &edges);
        let (x, y) = ([0usize, 1, 2, 3], [4usize, 5, 6, 7]);
        let mut d = 0.0;
        assert_eq!(spl_p_density(g, 0.5, x.as_ptr(), 4, y.as_ptr(), 4, &mut d), SplStatus::Ok);
        assert_eq!(d, 2.0);
        let mut verdict = -1;
        assert_eq!(spl_lower_regular(g, 0.3, 0.5, 1.0, x.as_ptr(), 4, y.as_ptr(), 4, &mut verdict), SplStatus::Ok);
        assert_eq!(verdict, 0);
        spl_graph_free(g);
    }
}

#[test]
fn adversary_and_concentration() {
    unsafe {
        let (mut absent, mut delta) = (false, 0);
        assert_eq!(spl_adversary_certify(400, 0.3, 0.3, 4, 5, &mut absent, &mut delta), SplStatus::Ok);
        assert!(absent && delta > 0);
        assert_eq!(spl_adversary_certify(400, 0.3, 0.3, 3, 5, ptr::null_mut(), ptr::null_mut()), SplStatus::InvalidParameter);
        let (mut pass, mut exc) = (false, 9);
        assert_eq!(spl_concentration_check(100, 0.2, 50, 1, &mut pass, &mut exc), SplStatus::Ok);
        assert!(pass);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(spl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/spanlab.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src.split("extern \"C\" fn ").skip(1).map(|s| s.split('(').next().unwrap()).collect();
    assert!(exports.len() > 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct SplGraph SplGraph;"));
}

#[test]
fn header_compiles_as_c99() {
    let Ok(cc) = which_cc() else { return };
    let dir = std::env::temp_dir().join(format!("spanlab_hdr_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("t.c");
    std::fs::write(&file, "#include \"spanlab.h\"\nint main(void) { SplGraph *g = 0; (void)g; return SPL_STATUS_OK; }\n")
        .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(format!("-I{}/include", env!("CARGO_MANIFEST_DIR")))
        .arg(&file)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"].into_iter().find(|c| std::process::Command::new(c).arg("--version").output().is_ok()).ok_or(())
}
