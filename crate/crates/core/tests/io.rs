use mcldg::benchmarks::{channel_mesh, Preset, PresetName};
use mcldg::io::{error_csv, write_error_csv, write_residual_history, write_vtk, ErrorRow, RunConfig};

#[test]
fn error_csv_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<ErrorRow> = [(24, 1.27e-2, None), (32, 6.43e-3, Some(2.3649)), (48, 2.26e-3, Some(2.5786))]
        .into_iter()
        .map(|(inv_h, l1_error, eoc)| ErrorRow {
            preset: "advect1d_smooth".into(),
            scheme: "dg".into(),
            p: 1,
            inv_h,
            dof: 4 * inv_h,
            l1_error,
            eoc,
        })
        .collect();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("nested/b.csv"));
    write_error_csv(&a, &rows).unwrap();
    write_error_csv(&b, &rows).unwrap();
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(bytes).unwrap(), error_csv(&rows));
    assert!(error_csv(&rows).contains("advect1d_smooth,dg,1,32,128,6.43000e-03,2.36490e+00\n"));
}

#[test]
fn io_failures_surface() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let err = write_error_csv(&blocker.join("t.csv"), &[]).unwrap_err();
    assert!(matches!(err, mcldg::Error::Io(_)));
    assert!(RunConfig::from_file(&dir.path().join("missing.toml")).is_err());
}

#[test]
fn vtk_dump_of_triangle_and_line_fields() {
    let dir = tempfile::tempdir().unwrap();
    let channel = Preset::new(PresetName::Channel).build(2, None, Some(channel_mesh(2).unwrap())).unwrap();
    let path = dir.path().join("channel.vtk");
    write_vtk(&channel.disc, &channel.initial, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let elements = channel.disc.num_elements();
    assert!(text.contains(&format!("POINTS {} double", elements * 6)));
    assert!(text.contains(&format!("CELLS {} {}", elements * 4, elements * 16)));
    assert!(text.contains("SCALARS velocity_magnitude double 1"));

    let sod = Preset::new(PresetName::Sod).build(2, Some(8), None).unwrap();
    let path = dir.path().join("sod.vtk");
    write_vtk(&sod.disc, &sod.initial, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("SCALARS pressure double 1"));
    assert!(text.contains(&format!("CELL_TYPES {}", sod.disc.num_elements() * 2)));
}

#[test]
fn residual_history_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    write_residual_history(&path, &[1.0, 0.5], &[0.1, 0.05]).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "step,r_max,r_l2\n1,1.00000e+00,1.00000e-01\n2,5.00000e-01,5.00000e-02\n"
    );
}
